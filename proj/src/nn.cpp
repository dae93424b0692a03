#include "bat/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace bat {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

struct Reader {
    const uint8_t* p;
    size_t left;
    void need(size_t n) const {
        if (left < n) throw MalformedRecord("BATW payload truncated");
    }
    uint8_t u8() {
        need(1);
        --left;
        return *p++;
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        left -= 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
        p += 4;
        left -= 4;
        return v;
    }
};

}  // namespace

Tensor ParamStore::add(const std::string& name, Tensor value) {
    if (has(name)) throw BadConfig("duplicate parameter '" + name + "'");
    value.set_requires_grad(true);
    params_.push_back({name, value, std::numeric_limits<double>::quiet_NaN()});
    return value;
}

Tensor ParamStore::add_bounded(const std::string& name, Tensor value, double lower_bound) {
    Tensor t = add(name, std::move(value));
    params_.back().lower_bound = lower_bound;
    return t;
}

Tensor ParamStore::add_he(const std::string& name, std::vector<int> shape, int fan_in) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    std::vector<double> data(n);
    for (double& v : data) v = dist(rng_);
    return add(name, Tensor::from(std::move(shape), std::move(data)));
}

Tensor ParamStore::add_zeros(const std::string& name, std::vector<int> shape) {
    return add(name, Tensor::zeros(std::move(shape)));
}

bool ParamStore::has(const std::string& name) const {
    for (const Parameter& p : params_)
        if (p.name == name) return true;
    return false;
}

Tensor ParamStore::get(const std::string& name) const {
    for (const Parameter& p : params_)
        if (p.name == name) return p.value;
    throw BadConfig("unknown parameter '" + name + "'");
}

void ParamStore::zero_grad() {
    for (Parameter& p : params_) p.value.zero_grad();
}

void ParamStore::project() {
    for (Parameter& p : params_) {
        if (std::isnan(p.lower_bound)) continue;
        double* d = p.value.data();
        for (size_t i = 0; i < p.value.numel(); ++i)
            if (d[i] < p.lower_bound) d[i] = p.lower_bound;
    }
}

Conv2d make_conv(ParamStore& store, const std::string& name, int cin, int cout, int kh, int kw,
                 int stride, int pad_h, int pad_w, bool zero_init, int groups) {
    if (cin % groups != 0 || cout % groups != 0)
        throw BadConfig("conv '" + name + "': channels not divisible by groups");
    Conv2d conv;
    conv.stride = stride;
    conv.pad_h = pad_h < 0 ? kh / 2 : pad_h;
    conv.pad_w = pad_w < 0 ? kw / 2 : pad_w;
    conv.groups = groups;
    const std::vector<int> wshape{cout, cin / groups, kh, kw};
    conv.w = zero_init ? store.add_zeros(name + ".w", wshape)
                       : store.add_he(name + ".w", wshape, (cin / groups) * kh * kw);
    conv.b = store.add_zeros(name + ".b", {cout});
    return conv;
}

std::vector<uint8_t> write_checkpoint(const ParamStore& store) {
    std::vector<uint8_t> out = {'B', 'A', 'T', 'W'};
    put_u32(out, static_cast<uint32_t>(store.size()));
    for (const Parameter& p : store.all()) {
        if (p.name.size() > 0xffff) throw BadConfig("parameter name too long");
        put_u16(out, static_cast<uint16_t>(p.name.size()));
        out.insert(out.end(), p.name.begin(), p.name.end());
        out.push_back(static_cast<uint8_t>(p.value.ndim()));
        for (int i = 0; i < p.value.ndim(); ++i)
            put_u32(out, static_cast<uint32_t>(p.value.dim(i)));
        for (size_t i = 0; i < p.value.numel(); ++i) {
            float f = static_cast<float>(p.value.data()[i]);
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put_u32(out, bits);
        }
    }
    return out;
}

void read_checkpoint(ParamStore& store, const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), "BATW", 4) != 0)
        throw MalformedRecord("not a BATW checkpoint");
    Reader r{bytes.data() + 4, bytes.size() - 4};
    const uint32_t count = r.u32();
    if (count != store.size())
        throw ShapeMismatch("checkpoint holds " + std::to_string(count) + " parameters, model has " +
                            std::to_string(store.size()));
    for (Parameter& p : store.all()) {
        const uint16_t len = r.u16();
        r.need(len);
        std::string name(reinterpret_cast<const char*>(r.p), len);
        r.p += len;
        r.left -= len;
        if (name != p.name)
            throw ShapeMismatch("checkpoint parameter '" + name + "' where '" + p.name +
                                "' was expected");
        const uint8_t rank = r.u8();
        if (rank != p.value.ndim()) throw ShapeMismatch("rank mismatch for '" + name + "'");
        size_t n = 1;
        for (int i = 0; i < rank; ++i) {
            const uint32_t dim = r.u32();
            if (static_cast<int>(dim) != p.value.dim(i))
                throw ShapeMismatch("dim mismatch for '" + name + "'");
            n *= dim;
        }
        for (size_t i = 0; i < n; ++i) {
            const uint32_t bits = r.u32();
            float f;
            std::memcpy(&f, &bits, 4);
            p.value.data()[i] = f;
        }
    }
    if (r.left != 0) throw MalformedRecord("trailing bytes in BATW checkpoint");
}

void save_checkpoint(const ParamStore& store, const std::string& path) {
    auto bytes = write_checkpoint(store);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + path + "'");
}

void load_checkpoint(ParamStore& store, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    read_checkpoint(store, bytes);
}

}  // namespace bat
