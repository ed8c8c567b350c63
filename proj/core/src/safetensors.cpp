#include "atlas/safetensors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <json.hpp>

#include "atlas/error.hpp"

namespace atlas {

using json = nlohmann::json;

std::string_view to_string(DTypeTag tag) {
    switch (tag) {
        case DTypeTag::F32: return "F32";
        case DTypeTag::F16: return "F16";
        case DTypeTag::BF16: return "BF16";
        case DTypeTag::I8: return "I8";
        case DTypeTag::I4: return "I4";
        case DTypeTag::Other: return "Other";
    }
    return "Other";
}

DTypeTag dtype_tag_from_string(std::string_view text) {
    for (auto tag : {DTypeTag::F32, DTypeTag::F16, DTypeTag::BF16, DTypeTag::I8, DTypeTag::I4}) {
        if (to_string(tag) == text) return tag;
    }
    return DTypeTag::Other;
}

DTypeTag tag_for_storage_dtype(std::string_view dtype) {
    if (dtype == "F32") return DTypeTag::F32;
    if (dtype == "F16") return DTypeTag::F16;
    if (dtype == "BF16") return DTypeTag::BF16;
    if (dtype == "I8" || dtype == "U8") return DTypeTag::I8;
    if (dtype == "I4" || dtype == "U4") return DTypeTag::I4;
    return DTypeTag::Other;
}

float half_to_float(std::uint16_t h) {
    const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
    const std::uint32_t exp = (h >> 10) & 0x1Fu;
    std::uint32_t mant = h & 0x3FFu;
    std::uint32_t bits;
    if (exp == 0) {
        if (mant == 0) {
            bits = sign;
        } else {
            // Subnormal: normalise the mantissa.
            int e = -1;
            do {
                ++e;
                mant <<= 1;
            } while ((mant & 0x400u) == 0);
            bits = sign | (static_cast<std::uint32_t>(127 - 15 - e) << 23) | ((mant & 0x3FFu) << 13);
        }
    } else if (exp == 0x1F) {
        bits = sign | 0x7F800000u | (mant << 13);
    } else {
        bits = sign | ((exp + 127 - 15) << 23) | (mant << 13);
    }
    return std::bit_cast<float>(bits);
}

std::uint16_t float_to_half(float f) {
    const std::uint32_t x = std::bit_cast<std::uint32_t>(f);
    const std::uint16_t sign = static_cast<std::uint16_t>((x >> 16) & 0x8000u);
    const std::uint32_t abs = x & 0x7FFFFFFFu;
    if (abs >= 0x7F800000u) {
        return static_cast<std::uint16_t>(sign | 0x7C00u | (abs > 0x7F800000u ? 0x200u : 0u));
    }
    if (abs >= 0x477FF000u) return static_cast<std::uint16_t>(sign | 0x7C00u);  // overflow to inf
    if (abs < 0x33000001u) return sign;                                           // underflow to zero
    std::uint32_t exp = abs >> 23;
    std::uint32_t mant = abs & 0x7FFFFFu;
    if (exp < 113) {
        // Result is subnormal in half precision.
        mant |= 0x800000u;
        const std::uint32_t shift = 126 - exp;
        std::uint32_t half = mant >> shift;
        const std::uint32_t rem = mant & ((1u << shift) - 1);
        const std::uint32_t mid = 1u << (shift - 1);
        if (rem > mid || (rem == mid && (half & 1u))) ++half;
        return static_cast<std::uint16_t>(sign | half);
    }
    std::uint32_t half = ((exp - 112) << 10) | (mant >> 13);
    const std::uint32_t rem = mant & 0x1FFFu;
    if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) ++half;
    return static_cast<std::uint16_t>(sign | half);
}

float bfloat16_to_float(std::uint16_t b) { return std::bit_cast<float>(static_cast<std::uint32_t>(b) << 16); }

std::uint16_t float_to_bfloat16(float f) {
    std::uint32_t x = std::bit_cast<std::uint32_t>(f);
    if ((x & 0x7FFFFFFFu) > 0x7F800000u) return static_cast<std::uint16_t>((x >> 16) | 0x40u);
    x += 0x7FFFu + ((x >> 16) & 1u);
    return static_cast<std::uint16_t>(x >> 16);
}

namespace {

std::size_t storage_size(std::string_view dtype) {
    if (dtype == "F64" || dtype == "I64" || dtype == "U64") return 8;
    if (dtype == "F32" || dtype == "I32" || dtype == "U32") return 4;
    if (dtype == "F16" || dtype == "BF16" || dtype == "I16" || dtype == "U16") return 2;
    if (dtype == "I8" || dtype == "U8" || dtype == "BOOL") return 1;
    return 0;
}

template <typename T>
T read_le(const std::uint8_t* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
    return v;
}

}  // namespace

std::size_t Tensor::numel() const {
    std::size_t n = 1;
    for (auto d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

std::size_t Tensor::element_size() const { return storage_size(dtype); }

double Tensor::value_at(std::size_t i) const {
    const auto* p = data.data() + i * element_size();
    if (dtype == "F32") return read_le<float>(p);
    if (dtype == "F64") return read_le<double>(p);
    if (dtype == "F16") return half_to_float(read_le<std::uint16_t>(p));
    if (dtype == "BF16") return bfloat16_to_float(read_le<std::uint16_t>(p));
    if (dtype == "I8") return read_le<std::int8_t>(p);
    if (dtype == "U8") return read_le<std::uint8_t>(p);
    if (dtype == "BOOL") return read_le<std::uint8_t>(p) ? 1.0 : 0.0;
    if (dtype == "I16") return read_le<std::int16_t>(p);
    if (dtype == "U16") return read_le<std::uint16_t>(p);
    if (dtype == "I32") return read_le<std::int32_t>(p);
    if (dtype == "U32") return read_le<std::uint32_t>(p);
    if (dtype == "I64") return static_cast<double>(read_le<std::int64_t>(p));
    if (dtype == "U64") return static_cast<double>(read_le<std::uint64_t>(p));
    fail(ErrorCode::MalformedContainer, "tensor '" + name + "' has undecodable dtype " + dtype);
}

void WeightContainer::add(Tensor tensor) {
    auto it = std::lower_bound(tensors_.begin(), tensors_.end(), tensor.name,
                               [](const Tensor& t, const std::string& n) { return t.name < n; });
    if (it != tensors_.end() && it->name == tensor.name) {
        fail(ErrorCode::MalformedContainer, "duplicate tensor name '" + tensor.name + "'");
    }
    for (auto d : tensor.shape) {
        if (d < 0) fail(ErrorCode::MalformedContainer, "negative dimension in '" + tensor.name + "'");
    }
    auto esize = tensor.element_size();
    if (esize != 0 && tensor.data.size() != tensor.numel() * esize) {
        fail(ErrorCode::MalformedContainer, "tensor '" + tensor.name + "' byte size does not match its shape");
    }
    tensors_.insert(it, std::move(tensor));
}

namespace {

template <typename T>
std::vector<std::uint8_t> to_raw(const std::vector<T>& values) {
    std::vector<std::uint8_t> raw(values.size() * sizeof(T));
    if (!raw.empty()) std::memcpy(raw.data(), values.data(), raw.size());
    return raw;
}

}  // namespace

void WeightContainer::add_f32(const std::string& name, std::vector<std::int64_t> shape, const std::vector<float>& values) {
    add(Tensor{name, "F32", std::move(shape), to_raw(values)});
}

void WeightContainer::add_f16(const std::string& name, std::vector<std::int64_t> shape, const std::vector<float>& values) {
    std::vector<std::uint16_t> h(values.size());
    std::transform(values.begin(), values.end(), h.begin(), float_to_half);
    add(Tensor{name, "F16", std::move(shape), to_raw(h)});
}

void WeightContainer::add_bf16(const std::string& name, std::vector<std::int64_t> shape, const std::vector<float>& values) {
    std::vector<std::uint16_t> h(values.size());
    std::transform(values.begin(), values.end(), h.begin(), float_to_bfloat16);
    add(Tensor{name, "BF16", std::move(shape), to_raw(h)});
}

void WeightContainer::add_i8(const std::string& name, std::vector<std::int64_t> shape, const std::vector<std::int8_t>& values) {
    add(Tensor{name, "I8", std::move(shape), to_raw(values)});
}

std::size_t WeightContainer::total_elements() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.numel();
    return n;
}

WeightContainer WeightContainer::from_bytes(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8) fail(ErrorCode::MalformedContainer, "file shorter than the 8-byte header length");
    const auto header_len = read_le<std::uint64_t>(bytes.data());
    if (header_len > bytes.size() - 8) fail(ErrorCode::MalformedContainer, "header length exceeds file size");
    json header;
    try {
        header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(header_len));
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedContainer, std::string("header is not valid JSON: ") + e.what());
    }
    if (!header.is_object()) fail(ErrorCode::MalformedContainer, "header must be a JSON object");
    const std::size_t base = 8 + header_len;
    const std::size_t buffer_size = bytes.size() - base;

    WeightContainer c;
    for (const auto& [name, info] : header.items()) {
        if (name == "__metadata__") continue;
        if (!info.is_object() || !info.contains("dtype") || !info.contains("shape") || !info.contains("data_offsets")) {
            fail(ErrorCode::MalformedContainer, "tensor '" + name + "' lacks dtype/shape/data_offsets");
        }
        const auto& off = info["data_offsets"];
        if (!info["dtype"].is_string() || !info["shape"].is_array() || !off.is_array() || off.size() != 2 ||
            !off[0].is_number_unsigned() || !off[1].is_number_unsigned()) {
            fail(ErrorCode::MalformedContainer, "tensor '" + name + "' has malformed fields");
        }
        auto begin = off[0].get<std::uint64_t>();
        auto end = off[1].get<std::uint64_t>();
        if (begin > end || end > buffer_size) {
            fail(ErrorCode::MalformedContainer, "tensor '" + name + "' data_offsets out of range");
        }
        Tensor t;
        t.name = name;
        t.dtype = info["dtype"].get<std::string>();
        for (const auto& d : info["shape"]) {
            if (!d.is_number_unsigned()) fail(ErrorCode::MalformedContainer, "tensor '" + name + "' has a bad shape");
            t.shape.push_back(d.get<std::int64_t>());
        }
        t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(base + begin),
                      bytes.begin() + static_cast<std::ptrdiff_t>(base + end));
        c.add(std::move(t));
    }
    return c;
}

std::vector<std::uint8_t> WeightContainer::to_bytes() const {
    json header = json::object();
    std::uint64_t offset = 0;
    for (const auto& t : tensors_) {
        header[t.name] = {{"dtype", t.dtype}, {"shape", t.shape}, {"data_offsets", {offset, offset + t.data.size()}}};
        offset += t.data.size();
    }
    auto text = header.dump();
    // Pad the header with spaces to an 8-byte boundary, as the reference writer does.
    while (text.size() % 8 != 0) text.push_back(' ');
    std::vector<std::uint8_t> out(8);
    const std::uint64_t len = text.size();
    std::memcpy(out.data(), &len, 8);
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& t : tensors_) out.insert(out.end(), t.data.begin(), t.data.end());
    return out;
}

WeightContainer WeightContainer::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_bytes(bytes);
}

void WeightContainer::save(const std::filesystem::path& path) const {
    auto bytes = to_bytes();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

}  // namespace atlas
