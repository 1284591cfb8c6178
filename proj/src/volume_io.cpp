#include "stens/volume_io.hpp"

#include <bit>
#include <fstream>

#include "stens/error.hpp"
#include "stens/text.hpp"

namespace stens {

namespace {

template <typename U>
void put(std::string& out, U v) {
    for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * b)) & 0xFF));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename U>
    U get() {
        need(sizeof(U));
        std::uint64_t v = 0;
        for (std::size_t b = 0; b < sizeof(U); ++b) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
        }
        pos_ += sizeof(U);
        return static_cast<U>(v);
    }

    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }

    std::string_view take(std::size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw input_error("truncated binary block", "body");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

void put_f64(std::string& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }

void put_header(std::string& out, const char* magic, const std::string& run_id, const GridSpec& g,
                const std::vector<FillFlag>& provenance) {
    out.append(magic, 4);
    out.push_back(1);
    for (double v : {g.x_min, g.x_max, g.y_min, g.y_max, g.dx, g.dy, g.t_min, g.t_max, g.dt}) put_f64(out, v);
    put(out, static_cast<std::uint32_t>(run_id.size()));
    out += run_id;
    for (auto f : provenance) out.push_back(static_cast<char>(f));
}

template <typename Vol>
void read_header(Reader& r, const char* magic, Vol& v) {
    if (r.take(4) != std::string_view(magic, 4)) throw input_error("unexpected cache file type", "cache");
    if (r.get<std::uint8_t>() != 1) throw input_error("unsupported cache version", "cache");
    auto& g = v.grid;
    for (double* f : {&g.x_min, &g.x_max, &g.y_min, &g.y_max, &g.dx, &g.dy, &g.t_min, &g.t_max, &g.dt}) {
        *f = r.get_f64();
    }
    g.validate();
    v.run_id = std::string(r.take(r.template get<std::uint32_t>()));
    v.provenance.resize(g.nt());
    for (auto& f : v.provenance) {
        const auto b = r.template get<std::uint8_t>();
        if (b > 2) throw input_error("invalid fill flag in cache", "cache");
        f = static_cast<FillFlag>(b);
    }
}

void write_bytes(const std::filesystem::path& file, const std::string& body) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw input_error("cannot write " + file.string(), file.string());
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw input_error("write failed: " + file.string(), file.string());
}

} // namespace

std::string encode_pmvb(const Brick& brick) {
    std::string out = "PMVB";
    out.push_back(1);
    put(out, static_cast<std::uint32_t>(brick.nt));
    put(out, static_cast<std::uint32_t>(brick.ny));
    put(out, static_cast<std::uint32_t>(brick.nx));
    out.reserve(out.size() + 4 * brick.values.size());
    for (float v : brick.values) put(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

Brick decode_pmvb(std::string_view bytes) {
    Reader r(bytes);
    if (r.take(4) != "PMVB") throw input_error("not a PMVB brick", "body");
    if (r.get<std::uint8_t>() != 1) throw input_error("unsupported PMVB version", "body");
    Brick b;
    b.nt = r.get<std::uint32_t>();
    b.ny = r.get<std::uint32_t>();
    b.nx = r.get<std::uint32_t>();
    b.values.resize(b.nt * b.ny * b.nx);
    for (auto& v : b.values) v = r.get_f32();
    if (!r.done()) throw input_error("trailing bytes after PMVB brick", "body");
    return b;
}

void write_volume_cache(const SpaceTimeVolume& v, const std::filesystem::path& file) {
    v.check_shape();
    std::string out;
    put_header(out, "PMAV", v.run_id, v.grid, v.provenance);
    out.reserve(out.size() + 16 * v.saturation.size());
    for (double x : v.saturation) put_f64(out, x);
    for (double x : v.concentration) put_f64(out, x);
    write_bytes(file, out);
}

SpaceTimeVolume read_volume_cache(const std::filesystem::path& file) {
    const auto bytes = text::read_file(file.string());
    Reader r(bytes);
    SpaceTimeVolume v;
    read_header(r, "PMAV", v);
    v.saturation.resize(v.grid.cell_count());
    v.concentration.resize(v.grid.cell_count());
    for (auto& x : v.saturation) x = r.get_f64();
    for (auto& x : v.concentration) x = r.get_f64();
    if (!r.done()) throw input_error("trailing bytes in " + file.string(), "cache");
    return v;
}

void write_segmentation_cache(const SegmentationVolume& v, const std::filesystem::path& file) {
    v.check_shape();
    std::string out;
    put_header(out, "PMAS", v.run_id, v.grid, v.provenance);
    out.append(reinterpret_cast<const char*>(v.classes.data()), v.classes.size());
    write_bytes(file, out);
}

SegmentationVolume read_segmentation_cache(const std::filesystem::path& file) {
    const auto bytes = text::read_file(file.string());
    Reader r(bytes);
    SegmentationVolume v;
    read_header(r, "PMAS", v);
    const auto raw = r.take(v.grid.cell_count());
    v.classes.assign(raw.begin(), raw.end());
    for (auto c : v.classes) {
        if (c > 2) throw input_error("invalid class in " + file.string(), "cache");
    }
    if (!r.done()) throw input_error("trailing bytes in " + file.string(), "cache");
    return v;
}

} // namespace stens
