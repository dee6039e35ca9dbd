#ifndef FLOWRECT_TENSOR_IO_HPP
#define FLOWRECT_TENSOR_IO_HPP

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "flowrect/errors.hpp"
#include "flowrect/tensor.hpp"

namespace flowrect {

// Tensor container format
// -----------------------
// Single tensor ("FRCT"):
//   magic "FRCT" | version u16 LE | dtype u8 (0 = f32) | rank u8 |
//   dims u32 LE x rank | payload row-major f32 LE
// Bundle ("FRCM"):
//   magic "FRCM" | version u16 LE | descriptor length u32 LE |
//   descriptor UTF-8 bytes | entry count u32 LE | entries, each:
//   name length u16 LE | name UTF-8 | dtype u8 | rank u8 |
//   dims u32 LE x rank | payload row-major f32 LE

constexpr std::uint16_t kTensorFormatVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint8_t kMaxRank = 8;
// Guards the dims product; also keeps payload sizes addressable everywhere.
constexpr std::uint64_t kMaxElements = (1ull << 31);

struct RawTensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::uint64_t numel() const {
        std::uint64_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

struct NamedTensor {
    std::string name;
    RawTensor tensor;
};

namespace detail {

class ByteWriter {
  public:
    explicit ByteWriter(const std::filesystem::path& path) : stream_(path, std::ios::binary) {
        if (!stream_) throw IoError("cannot open for writing: " + path.string());
        path_ = path.string();
    }
    void u8(std::uint8_t v) { put(&v, 1); }
    void u16(std::uint16_t v) {
        std::uint8_t b[2] = {std::uint8_t(v & 0xff), std::uint8_t(v >> 8)};
        put(b, 2);
    }
    void u32(std::uint32_t v) {
        std::uint8_t b[4];
        for (int i = 0; i < 4; ++i) b[i] = std::uint8_t((v >> (8 * i)) & 0xff);
        put(b, 4);
    }
    void u64(std::uint64_t v) {
        std::uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = std::uint8_t((v >> (8 * i)) & 0xff);
        put(b, 8);
    }
    void f32(float v) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        u32(u);
    }
    void bytes(const void* p, std::size_t n) { put(p, n); }
    void f32_array(const float* p, std::size_t n) {
        // f32 LE; bulk copy on little-endian hosts, element-wise otherwise.
        if constexpr (std::endian::native == std::endian::little) {
            put(p, n * 4);
        } else {
            for (std::size_t i = 0; i < n; ++i) f32(p[i]);
        }
    }
    void close() {
        stream_.close();
        if (!stream_) throw IoError("write failed: " + path_);
    }

  private:
    void put(const void* p, std::size_t n) {
        stream_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!stream_) throw IoError("write failed: " + path_);
    }
    std::ofstream stream_;
    std::string path_;
};

class ByteReader {
  public:
    explicit ByteReader(const std::filesystem::path& path) : stream_(path, std::ios::binary) {
        if (!stream_) throw IoError("cannot open for reading: " + path.string());
        path_ = path.string();
    }
    std::uint64_t offset() const { return offset_; }

    std::uint8_t u8() {
        std::uint8_t v;
        get(&v, 1, "u8");
        return v;
    }
    std::uint16_t u16() {
        std::uint8_t b[2];
        get(b, 2, "u16");
        return std::uint16_t(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        std::uint8_t b[4];
        get(b, 4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint8_t b[8];
        get(b, 8, "u64");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
        return v;
    }
    std::string str(std::size_t n, const char* what) {
        std::string s(n, '\0');
        get(s.data(), n, what);
        return s;
    }
    void f32_array(float* p, std::size_t n) {
        if constexpr (std::endian::native == std::endian::little) {
            get(p, n * 4, "tensor payload");
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                std::uint32_t u = u32();
                std::memcpy(&p[i], &u, 4);
            }
        }
    }
    bool at_eof() {
        return stream_.peek() == std::char_traits<char>::eof();
    }

  private:
    void get(void* p, std::size_t n, const char* what) {
        stream_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(stream_.gcount()) != n)
            throw FormatError(std::string("truncated file, expected ") + what + " in " + path_,
                              offset_ + static_cast<std::uint64_t>(stream_.gcount()));
        offset_ += n;
    }
    std::ifstream stream_;
    std::string path_;
    std::uint64_t offset_ = 0;
};

inline void write_raw(ByteWriter& w, const RawTensor& t) {
    w.u8(kDtypeF32);
    w.u8(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) w.u32(d);
    w.f32_array(t.data.data(), t.data.size());
}

inline RawTensor read_raw(ByteReader& r) {
    const std::uint64_t dtype_off = r.offset();
    const std::uint8_t dtype = r.u8();
    if (dtype != kDtypeF32)
        throw FormatError("unsupported dtype code " + std::to_string(int(dtype)), dtype_off);
    const std::uint64_t rank_off = r.offset();
    const std::uint8_t rank = r.u8();
    if (rank < 1 || rank > kMaxRank)
        throw FormatError("rank " + std::to_string(int(rank)) + " out of range [1," +
                              std::to_string(int(kMaxRank)) + "]",
                          rank_off);
    RawTensor t;
    t.dims.resize(rank);
    std::uint64_t numel = 1;
    for (int i = 0; i < rank; ++i) {
        const std::uint64_t dim_off = r.offset();
        t.dims[i] = r.u32();
        if (t.dims[i] == 0) throw FormatError("zero dimension", dim_off);
        numel *= t.dims[i];
        if (numel > kMaxElements) throw FormatError("dims overflow element budget", dim_off);
    }
    t.data.resize(numel);
    r.f32_array(t.data.data(), numel);
    return t;
}

}  // namespace detail

inline void save_tensor(const std::filesystem::path& path, const RawTensor& t) {
    if (t.numel() != t.data.size()) throw ShapeError("save_tensor: dims/data mismatch");
    detail::ByteWriter w(path);
    w.bytes("FRCT", 4);
    w.u16(kTensorFormatVersion);
    detail::write_raw(w, t);
    w.close();
}

inline RawTensor load_tensor(const std::filesystem::path& path) {
    detail::ByteReader r(path);
    if (r.str(4, "magic") != "FRCT") throw FormatError("bad magic bytes, want FRCT", 0);
    const std::uint64_t ver_off = r.offset();
    const std::uint16_t ver = r.u16();
    if (ver != kTensorFormatVersion)
        throw FormatError("unsupported format version " + std::to_string(ver), ver_off);
    RawTensor t = detail::read_raw(r);
    if (!r.at_eof()) throw FormatError("trailing bytes after payload", r.offset());
    return t;
}

inline void save_bundle(const std::filesystem::path& path, const std::string& descriptor,
                        const std::vector<NamedTensor>& entries) {
    detail::ByteWriter w(path);
    w.bytes("FRCM", 4);
    w.u16(kTensorFormatVersion);
    w.u32(static_cast<std::uint32_t>(descriptor.size()));
    w.bytes(descriptor.data(), descriptor.size());
    w.u32(static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        if (e.tensor.numel() != e.tensor.data.size())
            throw ShapeError("save_bundle: dims/data mismatch for " + e.name);
        w.u16(static_cast<std::uint16_t>(e.name.size()));
        w.bytes(e.name.data(), e.name.size());
        detail::write_raw(w, e.tensor);
    }
    w.close();
}

struct Bundle {
    std::string descriptor;
    std::vector<NamedTensor> entries;

    const NamedTensor* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
};

inline Bundle load_bundle(const std::filesystem::path& path) {
    detail::ByteReader r(path);
    if (r.str(4, "magic") != "FRCM") throw FormatError("bad magic bytes, want FRCM", 0);
    const std::uint64_t ver_off = r.offset();
    const std::uint16_t ver = r.u16();
    if (ver != kTensorFormatVersion)
        throw FormatError("unsupported format version " + std::to_string(ver), ver_off);
    Bundle b;
    const std::uint32_t desc_len = r.u32();
    b.descriptor = r.str(desc_len, "descriptor");
    const std::uint32_t count = r.u32();
    b.entries.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t name_len = r.u16();
        b.entries[i].name = r.str(name_len, "entry name");
        b.entries[i].tensor = detail::read_raw(r);
    }
    if (!r.at_eof()) throw FormatError("trailing bytes after last entry", r.offset());
    return b;
}

// ---- Tensor4 adapters ----

template <typename S>
RawTensor to_raw(const Tensor4<S>& t) {
    RawTensor r;
    r.dims = {std::uint32_t(t.shape().l), std::uint32_t(t.shape().c), std::uint32_t(t.shape().h),
              std::uint32_t(t.shape().w)};
    r.data.resize(t.size());
    for (std::int64_t i = 0; i < t.size(); ++i) r.data[i] = static_cast<float>(t.data()[i]);
    return r;
}

inline Tensor4f from_raw_rank4(const RawTensor& r, const char* what) {
    if (r.dims.size() != 4)
        throw ShapeError(std::string(what) + ": expected rank 4, got rank " +
                         std::to_string(r.dims.size()));
    Shape4 s{std::int64_t(r.dims[0]), std::int64_t(r.dims[1]), std::int64_t(r.dims[2]),
             std::int64_t(r.dims[3])};
    Tensor4f t(s);
    std::memcpy(t.data(), r.data.data(), r.data.size() * sizeof(float));
    return t;
}

// Accepts [C,H,W] or [1,C,H,W] files for single frames.
inline Tensor4f from_raw_frame(const RawTensor& r, const char* what) {
    if (r.dims.size() == 3) {
        Shape4 s{1, std::int64_t(r.dims[0]), std::int64_t(r.dims[1]), std::int64_t(r.dims[2])};
        Tensor4f t(s);
        std::memcpy(t.data(), r.data.data(), r.data.size() * sizeof(float));
        return t;
    }
    Tensor4f t = from_raw_rank4(r, what);
    if (t.shape().l != 1) throw ShapeError(std::string(what) + ": expected a single frame");
    return t;
}

inline void save_frames(const std::filesystem::path& path, const FrameSequence& seq) {
    save_tensor(path, to_raw(seq.frames));
}

inline FrameSequence load_frames(const std::filesystem::path& path) {
    return FrameSequence(from_raw_rank4(load_tensor(path), path.string().c_str()));
}

// ---- Image export ----

// Maps [-1,1] to [0,255] with round-half-up; one P6/P5 image per frame.
inline std::uint8_t to_byte(float v) {
    const double scaled = (static_cast<double>(v) + 1.0) / 2.0 * 255.0;
    const double rounded = std::floor(scaled + 0.5);
    return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, rounded)));
}

inline void export_frames(const FrameSequence& seq, const std::filesystem::path& dir,
                          const std::string& stem = "frame") {
    const Shape4& s = seq.shape();
    if (s.c != 1 && s.c != 3)
        throw DomainError("export_frames: unsupported channel count " + std::to_string(s.c));
    std::filesystem::create_directories(dir);
    for (std::int64_t l = 0; l < s.l; ++l) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%03lld.%s", stem.c_str(),
                      static_cast<long long>(l), s.c == 3 ? "ppm" : "pgm");
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + (dir / name).string());
        out << (s.c == 3 ? "P6" : "P5") << "\n" << s.w << " " << s.h << "\n255\n";
        for (std::int64_t y = 0; y < s.h; ++y)
            for (std::int64_t x = 0; x < s.w; ++x)
                for (std::int64_t c = 0; c < s.c; ++c)
                    out.put(static_cast<char>(to_byte(seq.frames.at(l, c, y, x))));
        if (!out) throw IoError("write failed: " + (dir / name).string());
    }
}

// Write-temp-then-rename; keeps partially written files invisible.
template <typename WriteFn>
void atomic_write(const std::filesystem::path& path, WriteFn&& fn) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    fn(tmp);
    std::filesystem::rename(tmp, path);
}

}  // namespace flowrect

#endif
