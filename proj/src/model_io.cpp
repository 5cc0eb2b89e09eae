#include "cfpr/model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "cfpr/error.hpp"

namespace cfpr {
namespace {

constexpr char kMagic[4] = {'C', 'F', 'P', 'R'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
public:
    Reader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t x = 0;
        for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return x;
    }

    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }

    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::size_t n) {
        if (pos_ + n > data_.size()) throw Error("model file truncated: " + path_);
    }
    const std::string& data_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

std::size_t serialized_size(const ArchSpec& arch) {
    std::size_t n = 4 + 4 + 4 * 4 + arch.layers.size() * 12;
    n += static_cast<std::size_t>(arch.param_count()) * 8;
    return n;
}

void save_model(const Model& m, const std::string& path) {
    std::string out;
    out.reserve(serialized_size(m.arch));
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(m.arch.input_h));
    put_u32(out, static_cast<std::uint32_t>(m.arch.input_w));
    put_u32(out, static_cast<std::uint32_t>(m.arch.input_c));
    put_u32(out, static_cast<std::uint32_t>(m.arch.layers.size()));
    for (const LayerSpec& l : m.arch.layers) {
        put_u32(out, static_cast<std::uint32_t>(l.kind));
        put_u32(out, static_cast<std::uint32_t>(l.channels));
        put_u32(out, static_cast<std::uint32_t>(l.kernel));
    }
    for (const LayerParams& p : m.params) {
        for (const double w : p.weights.v) put_f64(out, w);
        for (const double b : p.bias) put_f64(out, b);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error("write failed: " + path);
}

Model load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open model file: " + path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (data.size() < 8 || std::memcmp(data.data(), kMagic, 4) != 0) {
        throw Error("bad model magic in " + path);
    }
    Reader r(data, path);
    r.u32();  // magic, already checked
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw Error("unsupported model version " + std::to_string(version) + " in " + path);
    }
    ArchSpec arch;
    arch.input_h = static_cast<int>(r.u32());
    arch.input_w = static_cast<int>(r.u32());
    arch.input_c = static_cast<int>(r.u32());
    const std::uint32_t n_layers = r.u32();
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        LayerSpec l;
        const std::uint32_t kind = r.u32();
        if (kind > 2) throw Error("bad layer kind in " + path);
        l.kind = static_cast<LayerKind>(kind);
        l.channels = static_cast<int>(r.u32());
        l.kernel = static_cast<int>(r.u32());
        arch.layers.push_back(l);
    }
    arch.validate();

    Model m = init_model(arch, 0);
    for (LayerParams& p : m.params) {
        for (double& w : p.weights.v) w = r.f64();
        for (double& b : p.bias) b = r.f64();
    }
    if (r.remaining() != 0) throw Error("trailing bytes in model file " + path);
    m.meta = TrainMeta{};
    return m;
}

}  // namespace cfpr
