#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace atlas {

enum class DTypeTag { F32, F16, BF16, I8, I4, Other };

std::string_view to_string(DTypeTag tag);
DTypeTag dtype_tag_from_string(std::string_view text);

// Maps a safetensors dtype string ("F32", "BF16", "U8", ...) to a tag.
DTypeTag tag_for_storage_dtype(std::string_view dtype);

float half_to_float(std::uint16_t h);
std::uint16_t float_to_half(float f);  // round to nearest even
float bfloat16_to_float(std::uint16_t b);
std::uint16_t float_to_bfloat16(float f);  // round to nearest even

struct Tensor {
    std::string name;
    std::string dtype;  // safetensors storage dtype
    std::vector<std::int64_t> shape;
    std::vector<std::uint8_t> data;  // little-endian raw buffer

    std::size_t numel() const;
    std::size_t element_size() const;  // 0 for dtypes we cannot decode
    double value_at(std::size_t i) const;
};

// Named tensors from one checkpoint, kept sorted by name.
class WeightContainer {
public:
    void add(Tensor tensor);
    void add_f32(const std::string& name, std::vector<std::int64_t> shape, const std::vector<float>& values);
    void add_f16(const std::string& name, std::vector<std::int64_t> shape, const std::vector<float>& values);
    void add_bf16(const std::string& name, std::vector<std::int64_t> shape, const std::vector<float>& values);
    void add_i8(const std::string& name, std::vector<std::int64_t> shape, const std::vector<std::int8_t>& values);

    const std::vector<Tensor>& tensors() const noexcept { return tensors_; }
    std::size_t total_elements() const;

    static WeightContainer from_bytes(const std::vector<std::uint8_t>& bytes);
    std::vector<std::uint8_t> to_bytes() const;

    static WeightContainer load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    std::vector<Tensor> tensors_;
};

}  // namespace atlas
