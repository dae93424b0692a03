#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "bat/tensor.hpp"

namespace bat {

struct Parameter {
    std::string name;
    Tensor value;
    // Optional box constraint applied after each optimizer step (NaN = none).
    double lower_bound = std::numeric_limits<double>::quiet_NaN();
};

// Ordered, named parameter registry. Insertion order is the serialization
// order, so checkpoints are deterministic.
class ParamStore {
  public:
    explicit ParamStore(uint64_t seed = 0) : rng_(seed) {}

    Tensor add(const std::string& name, Tensor value);
    Tensor add_bounded(const std::string& name, Tensor value, double lower_bound);
    // He-normal: N(0, sqrt(2 / fan_in)).
    Tensor add_he(const std::string& name, std::vector<int> shape, int fan_in);
    Tensor add_zeros(const std::string& name, std::vector<int> shape);

    bool has(const std::string& name) const;
    Tensor get(const std::string& name) const;
    std::vector<Parameter>& all() { return params_; }
    const std::vector<Parameter>& all() const { return params_; }
    size_t size() const { return params_.size(); }

    void zero_grad();
    // Clamps bounded parameters to their lower bounds in place.
    void project();

    std::mt19937_64& rng() { return rng_; }

  private:
    std::vector<Parameter> params_;
    std::mt19937_64 rng_;
};

// Conv layer whose weights live in a ParamStore.
struct Conv2d {
    Tensor w, b;
    int stride = 1, pad_h = 0, pad_w = 0, groups = 1;

    Tensor operator()(const Tensor& x) const { return conv2d(x, w, b, stride, pad_h, pad_w, groups); }
};

// Registers "<name>.w" / "<name>.b". pad_h/pad_w = -1 means same padding
// (k/2). zero_init makes both weight and bias zero (used for output heads).
Conv2d make_conv(ParamStore& store, const std::string& name, int cin, int cout, int kh, int kw,
                 int stride = 1, int pad_h = -1, int pad_w = -1, bool zero_init = false,
                 int groups = 1);

// Checkpoint format BATW: magic "BATW", u32 param count, then per parameter:
// u16 name length, name bytes, u8 rank, u32 dims..., f32 little-endian data.
std::vector<uint8_t> write_checkpoint(const ParamStore& store);
// Strict: names, order, and shapes must match the store exactly.
void read_checkpoint(ParamStore& store, const std::vector<uint8_t>& bytes);
void save_checkpoint(const ParamStore& store, const std::string& path);
void load_checkpoint(ParamStore& store, const std::string& path);

}  // namespace bat
