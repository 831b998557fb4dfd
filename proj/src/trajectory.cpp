#include "wakd/trajectory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "wakd/errors.hpp"

namespace fs = std::filesystem;

namespace wakd {

namespace {

constexpr char kMagic[4] = {'W', 'A', 'K', 'D'};

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
    put_u32(buf, std::bit_cast<std::uint32_t>(v));
}

class Cursor {
public:
    Cursor(const std::string& data, const fs::path& path) : data_(data), path_(path) {}

    std::uint32_t u32(const char* field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64(const char* field) {
        need(8, field);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    float f32(const char* field) { return std::bit_cast<float>(u32(field)); }

    void magic() {
        need(4, "magic");
        if (std::memcmp(data_.data() + pos_, kMagic, 4) != 0)
            throw FormatError(path_.string() + ": bad magic bytes");
        pos_ += 4;
    }

    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::size_t n, const char* field) {
        if (data_.size() - pos_ < n)
            throw FormatError(path_.string() + ": truncated while reading field '" + field + "'");
    }

    const std::string& data_;
    const fs::path& path_;
    std::size_t pos_ = 0;
};

std::string read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

} // namespace

void write_checkpoint_file(const fs::path& path, const Checkpoint& ck) {
    std::string buf;
    buf.reserve(24 + ck.params.size() * 4);
    buf.append(kMagic, 4);
    put_u32(buf, kCheckpointVersion);
    put_u64(buf, ck.iteration);
    put_u64(buf, static_cast<std::uint64_t>(ck.params.size()));
    for (float v : ck.params)
        put_f32(buf, v);

    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out)
            throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

Checkpoint read_checkpoint_file(const fs::path& path) {
    const std::string data = read_all(path);
    Cursor cur(data, path);
    cur.magic();
    const std::uint32_t version = cur.u32("version");
    if (version != kCheckpointVersion)
        throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
    Checkpoint ck;
    ck.iteration = cur.u64("iteration");
    const std::uint64_t count = cur.u64("param_count");
    if (cur.remaining() != count * 4)
        throw FormatError(path.string() + ": field 'values' has " + std::to_string(cur.remaining()) +
                          " bytes, expected " + std::to_string(count * 4));
    ck.params.resize(count);
    for (std::uint64_t i = 0; i < count; ++i)
        ck.params[i] = cur.f32("values");
    return ck;
}

CheckpointStore::CheckpointStore(fs::path dir, bool create) : dir_(std::move(dir)) {
    std::error_code ec;
    if (create)
        fs::create_directories(dir_, ec);
    if (!fs::is_directory(dir_))
        throw IoError("checkpoint store directory missing: " + dir_.string());
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".wakd")
            continue;
        const std::string stem = entry.path().stem().string();
        if (stem.empty() || stem.find_first_not_of("0123456789") != std::string::npos)
            continue;
        iterations_.push_back(std::stoull(stem));
    }
    std::sort(iterations_.begin(), iterations_.end());
}

void CheckpointStore::write(const Checkpoint& ck) {
    if (contains(ck.iteration))
        throw ConflictError("checkpoint for iteration " + std::to_string(ck.iteration) +
                            " already exists in " + dir_.string());
    write_checkpoint_file(dir_ / (std::to_string(ck.iteration) + ".wakd"), ck);
    iterations_.insert(std::upper_bound(iterations_.begin(), iterations_.end(), ck.iteration),
                       ck.iteration);
}

Checkpoint CheckpointStore::read(std::uint64_t iteration) const {
    if (!contains(iteration))
        throw NotFoundError("no checkpoint for iteration " + std::to_string(iteration) + " in " +
                            dir_.string());
    Checkpoint ck = read_checkpoint_file(dir_ / (std::to_string(iteration) + ".wakd"));
    if (ck.iteration != iteration)
        throw FormatError(dir_.string() + "/" + std::to_string(iteration) +
                          ".wakd: field 'iteration' is " + std::to_string(ck.iteration) +
                          ", expected " + std::to_string(iteration));
    return ck;
}

bool CheckpointStore::contains(std::uint64_t iteration) const {
    return std::binary_search(iterations_.begin(), iterations_.end(), iteration);
}

std::uint64_t CheckpointStore::max_iteration() const {
    if (iterations_.empty())
        throw NotFoundError("checkpoint store is empty: " + dir_.string());
    return iterations_.back();
}

CheckpointStream CheckpointStore::stream(std::uint64_t from, std::uint64_t to) const {
    std::vector<std::uint64_t> selected;
    for (std::uint64_t it : iterations_)
        if (it >= from && it <= to)
            selected.push_back(it);
    return CheckpointStream(dir_, std::move(selected));
}

std::optional<Checkpoint> CheckpointStream::next() {
    if (pos_ >= iterations_.size())
        return std::nullopt;
    const std::uint64_t it = iterations_[pos_++];
    return read_checkpoint_file(dir_ / (std::to_string(it) + ".wakd"));
}

void TrajectoryLog::append(const EvalRecord& rec) {
    if (!records.empty() && rec.iteration <= records.back().iteration)
        throw DomainError("trajectory iterations must strictly increase: " +
                          std::to_string(rec.iteration) + " after " +
                          std::to_string(records.back().iteration));
    if (!std::isfinite(rec.val_loss))
        throw NumericError("trajectory: non-finite val_loss at iteration " +
                           std::to_string(rec.iteration));
    if (!(rec.val_accuracy >= 0.0 && rec.val_accuracy <= 1.0))
        throw DomainError("trajectory: val_accuracy out of [0,1] at iteration " +
                          std::to_string(rec.iteration));
    records.push_back(rec);
}

void TrajectoryLog::save_csv(const fs::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << "iteration,val_loss,val_accuracy\n";
    char buf[64];
    for (const auto& rec : records) {
        out << rec.iteration << ',';
        std::snprintf(buf, sizeof(buf), "%.9g", rec.val_loss);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.9g", rec.val_accuracy);
        out << buf << '\n';
    }
    if (!out)
        throw IoError("write failed for " + path.string());
}

TrajectoryLog TrajectoryLog::load_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw FormatError(path.string() + ": missing header");
    if (line == "iteration,val_loss,val_accuracy\r")
        line.pop_back();
    if (line != "iteration,val_loss,val_accuracy")
        throw FormatError(path.string() + ": bad header '" + line + "'");
    TrajectoryLog log;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        EvalRecord rec;
        char* end = nullptr;
        const char* s = line.c_str();
        rec.iteration = std::strtoull(s, &end, 10);
        if (end == s || *end != ',')
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad field 'iteration'");
        s = end + 1;
        rec.val_loss = std::strtod(s, &end);
        if (end == s || *end != ',')
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad field 'val_loss'");
        s = end + 1;
        rec.val_accuracy = std::strtod(s, &end);
        if (end == s || *end != '\0')
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad field 'val_accuracy'");
        try {
            log.append(rec);
        } catch (const Error& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return log;
}

} // namespace wakd
