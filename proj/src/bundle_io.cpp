#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mdn/data.hpp"
#include "mdn/errors.hpp"

namespace mdn {

namespace {

constexpr char kMagic[5] = {'M', 'D', 'N', 'B', '1'};

// All MDNB1 integers and doubles are little-endian regardless of host order.

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_i32(std::string& out, std::int32_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
}

class Reader {
  public:
    Reader(std::string bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[at_ + i]))
                 << (8 * i);
        }
        at_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[at_ + i]))
                 << (8 * i);
        }
        at_ += 8;
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }

    void raw(char* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, bytes_.data() + at_, n);
        at_ += n;
    }

    std::size_t offset() const { return at_; }
    std::size_t remaining() const { return bytes_.size() - at_; }

    void expect_end() const {
        if (at_ != bytes_.size()) {
            throw FormatError(path_ + ": " + std::to_string(bytes_.size() - at_) +
                              " trailing bytes at offset " + std::to_string(at_));
        }
    }

  private:
    void need(std::size_t n) const {
        if (bytes_.size() - at_ < n) {
            throw FormatError(path_ + ": truncated at offset " + std::to_string(at_) +
                              " (need " + std::to_string(n) + " bytes, have " +
                              std::to_string(bytes_.size() - at_) + ")");
        }
    }

    std::string bytes_;
    std::string path_;
    std::size_t at_ = 0;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on '" + path + "'");
    return bytes;
}

void append_split(std::string& out, const LabeledBatch& split) {
    put_u64(out, split.size());
    put_u32(out, static_cast<std::uint32_t>(split.x.cols));
    for (double v : split.x.data) put_f64(out, v);
    for (int v : split.y) put_i32(out, v);
    for (int v : split.b) put_i32(out, v);
}

LabeledBatch read_split(Reader& r, const std::string& path) {
    const std::uint64_t n = r.u64();
    const std::uint32_t d = r.u32();
    if (n == 0 || d == 0) {
        throw FormatError(path + ": empty split (n=" + std::to_string(n) +
                          ", d=" + std::to_string(d) + ") at offset " +
                          std::to_string(r.offset()));
    }
    LabeledBatch split;
    split.x = DenseMatrix(static_cast<std::size_t>(n), d);
    for (double& v : split.x.data) v = r.f64();
    split.y.resize(static_cast<std::size_t>(n));
    split.b.resize(static_cast<std::size_t>(n));
    for (int& v : split.y) v = r.i32();
    for (int& v : split.b) v = r.i32();
    return split;
}

}  // namespace

void save_bundle(const DataBundle& bundle, const std::string& path) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(bundle.num_classes));
    put_u32(out, static_cast<std::uint32_t>(bundle.num_bias));
    append_split(out, bundle.train);
    append_split(out, bundle.val);
    append_split(out, bundle.test);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    f.flush();
    if (!f) throw IoError("write failure on '" + path + "'");
}

DataBundle load_bundle(const std::string& path) {
    Reader r(slurp(path), path);
    char magic[sizeof(kMagic)];
    r.raw(magic, sizeof(kMagic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError(path + ": bad magic at offset 0 (expected \"MDNB1\")");
    }
    DataBundle bundle;
    bundle.num_classes = r.u32();
    bundle.num_bias = r.u32();
    if (bundle.num_classes < 2 || bundle.num_bias < 2) {
        throw FormatError(path + ": header declares C=" + std::to_string(bundle.num_classes) +
                          ", B=" + std::to_string(bundle.num_bias) + " (both must be >= 2)");
    }
    bundle.train = read_split(r, path);
    bundle.val = read_split(r, path);
    bundle.test = read_split(r, path);
    r.expect_end();
    finalize_bundle(bundle);
    return bundle;
}

namespace {

std::uint32_t read_be_u32(Reader& r) {
    // IDX headers are big-endian; Reader::u32 is little-endian, so byte-swap.
    const std::uint32_t le = r.u32();
    return ((le & 0xFF) << 24) | ((le & 0xFF00) << 8) | ((le >> 8) & 0xFF00) | (le >> 24);
}

}  // namespace

IdxImages read_idx_images(const std::string& path) {
    Reader r(slurp(path), path);
    const std::uint32_t magic = read_be_u32(r);
    if (magic != 0x00000803u) {
        throw FormatError(path + ": image magic mismatch at offset 0 (expected 0x00000803)");
    }
    IdxImages out;
    out.count = read_be_u32(r);
    out.height = read_be_u32(r);
    out.width = read_be_u32(r);
    if (out.count == 0 || out.height == 0 || out.width == 0) {
        throw FormatError(path + ": zero dimension in image header");
    }
    const std::size_t total = out.count * out.height * out.width;
    out.pixels.resize(total);
    r.raw(reinterpret_cast<char*>(out.pixels.data()), total);
    r.expect_end();
    return out;
}

std::vector<int> read_idx_labels(const std::string& path) {
    Reader r(slurp(path), path);
    const std::uint32_t magic = read_be_u32(r);
    if (magic != 0x00000801u) {
        throw FormatError(path + ": label magic mismatch at offset 0 (expected 0x00000801)");
    }
    const std::uint32_t n = read_be_u32(r);
    if (n == 0) throw FormatError(path + ": zero labels in header");
    std::vector<std::uint8_t> raw(n);
    r.raw(reinterpret_cast<char*>(raw.data()), n);
    r.expect_end();
    return std::vector<int>(raw.begin(), raw.end());
}

}  // namespace mdn
