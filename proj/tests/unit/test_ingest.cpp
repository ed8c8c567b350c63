#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "atlas/error.hpp"
#include "atlas/fingerprint.hpp"
#include "atlas/metadata.hpp"
#include "atlas/rng.hpp"
#include "atlas/safetensors.hpp"
#include "atlas/syngen.hpp"

using namespace atlas;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an atlas::Error");
    return ErrorCode::InvalidArgument;
}

std::vector<float> gaussian(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(scale * rng.normal());
    return v;
}

}  // namespace

TEST_CASE("half and bfloat16 conversions") {
    CHECK(half_to_float(0x3C00) == 1.0f);
    CHECK(half_to_float(0xC000) == -2.0f);
    CHECK(half_to_float(0x7BFF) == 65504.0f);
    CHECK(half_to_float(0x0001) == doctest::Approx(5.960464477539063e-8));
    CHECK(std::isinf(half_to_float(0x7C00)));
    CHECK(float_to_half(1.0f) == 0x3C00);
    CHECK(float_to_half(-2.0f) == 0xC000);
    // 1 + 2^-11 sits halfway between 1 and the next half; ties go to even.
    CHECK(float_to_half(1.0f + 0.00048828125f) == 0x3C00);
    CHECK(bfloat16_to_float(0x3F80) == 1.0f);
    CHECK(float_to_bfloat16(1.0f) == 0x3F80);
    for (std::uint32_t h = 0; h < 0x7C00; h += 7) {
        CHECK(float_to_half(half_to_float(static_cast<std::uint16_t>(h))) == h);
    }
}

TEST_CASE("safetensors container round-trip") {
    WeightContainer c;
    c.add_f32("layer.0.attn.q", {2, 3}, {1, 2, 3, 4, 5, 6});
    c.add_f16("layer.0.mlp", {4}, {0.5f, -1.0f, 2.0f, 0.25f});
    c.add_bf16("emb", {2}, {1.0f, -3.0f});
    c.add_i8("q8", {3}, {-1, 0, 7});
    auto bytes = c.to_bytes();
    auto back = WeightContainer::from_bytes(bytes);
    REQUIRE(back.tensors().size() == 4);
    CHECK(back.tensors()[0].name == "emb");  // sorted by name
    CHECK(back.total_elements() == 15);
    const auto& q = back.tensors()[1];
    CHECK(q.name == "layer.0.attn.q");
    CHECK(q.value_at(5) == 6.0);
    CHECK(back.tensors()[2].value_at(1) == -1.0);
    CHECK(back.tensors()[3].value_at(2) == 7.0);
    CHECK(back.to_bytes() == bytes);
}

TEST_CASE("malformed containers") {
    CHECK(code_of([] { WeightContainer::from_bytes({1, 2, 3}); }) == ErrorCode::MalformedContainer);
    std::vector<std::uint8_t> bad(8, 0);
    bad[0] = 200;  // header longer than the file
    CHECK(code_of([&] { WeightContainer::from_bytes(bad); }) == ErrorCode::MalformedContainer);
    WeightContainer c;
    c.add_f32("t", {2}, {1, 2});
    auto bytes = c.to_bytes();
    bytes.pop_back();  // data shorter than the offsets claim
    CHECK(code_of([&] { WeightContainer::from_bytes(bytes); }) == ErrorCode::MalformedContainer);
    CHECK(code_of([] { WeightContainer::load("/nonexistent/x.safetensors"); }) == ErrorCode::IoError);
}

TEST_CASE("storage dtype tags") {
    CHECK(tag_for_storage_dtype("F32") == DTypeTag::F32);
    CHECK(tag_for_storage_dtype("F16") == DTypeTag::F16);
    CHECK(tag_for_storage_dtype("BF16") == DTypeTag::BF16);
    CHECK(tag_for_storage_dtype("I8") == DTypeTag::I8);
    CHECK(tag_for_storage_dtype("F8_E4M3") == DTypeTag::Other);
    for (auto t : {DTypeTag::F32, DTypeTag::F16, DTypeTag::BF16, DTypeTag::I8, DTypeTag::I4, DTypeTag::Other}) {
        CHECK(dtype_tag_from_string(to_string(t)) == t);
    }
}

TEST_CASE("fingerprint extraction") {
    WeightContainer c;
    c.add_f32("w", {200}, gaussian(200, 1));
    auto a = extract_fingerprint(ModelId("m"), c, Selector::all(), 100, 5);
    auto b = extract_fingerprint(ModelId("m"), c, Selector::all(), 100, 5);
    CHECK(a == b);
    CHECK(a.values.size() == 100);
    CHECK(a.dim == 100);
    CHECK(a.dtype_tag == DTypeTag::F32);
    auto other_seed = extract_fingerprint(ModelId("m"), c, Selector::all(), 100, 6);
    CHECK(other_seed.values != a.values);

    SUBCASE("selector too narrow") {
        CHECK(code_of([&] { extract_fingerprint(ModelId("m"), c, Selector::attention(), 100, 0); }) ==
              ErrorCode::SelectorTooNarrow);
        CHECK(code_of([&] { extract_fingerprint(ModelId("m"), c, Selector::all(), 201, 0); }) ==
              ErrorCode::SelectorTooNarrow);
    }
    SUBCASE("stable under re-serialization and tensor insertion order") {
        WeightContainer x, y;
        auto v1 = gaussian(150, 2), v2 = gaussian(150, 3);
        x.add_f32("b.attn", {150}, v1);
        x.add_f32("a.mlp", {150}, v2);
        y.add_f32("a.mlp", {150}, v2);
        y.add_f32("b.attn", {150}, v1);
        auto fx = extract_fingerprint(ModelId("m"), WeightContainer::from_bytes(x.to_bytes()), Selector::all(), 50, 9);
        auto fy = extract_fingerprint(ModelId("m"), y, Selector::all(), 50, 9);
        CHECK(fx == fy);
        auto attn = extract_fingerprint(ModelId("m"), x, Selector::attention(), 50, 9);
        std::set<double> from_attn(v1.begin(), v1.end());
        for (double v : attn.values) CHECK(from_attn.count(v));
    }
}

TEST_CASE("selector parsing") {
    CHECK(Selector::parse("").patterns.empty());
    CHECK(Selector::parse("*").patterns.empty());
    auto s = Selector::parse("attn,proj");
    CHECK(s.matches("x.attn.q"));
    CHECK(s.matches("out_proj"));
    CHECK_FALSE(s.matches("mlp"));
    CHECK(s.filter_string() == "attn,proj");
    CHECK(Selector::all().filter_string() == "*");
}

TEST_CASE("subsampled distance tracks the full-weight distance") {
    // child = parent + eps * noise: the fingerprint distance scaled by
    // total/dim estimates the full squared distance.
    const std::size_t n = 20000, dim = 400;
    const double eps = 0.01;
    auto parent = gaussian(n, 11);
    auto noise = gaussian(n, 12);
    std::vector<float> child(n);
    double full = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        child[i] = parent[i] + static_cast<float>(eps) * noise[i];
        const double d = static_cast<double>(child[i]) - parent[i];
        full += d * d;
    }
    WeightContainer p, c;
    p.add_f32("w", {static_cast<std::int64_t>(n)}, parent);
    c.add_f32("w", {static_cast<std::int64_t>(n)}, child);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto fp = extract_fingerprint(ModelId("p"), p, Selector::all(), dim, seed);
        auto fc = extract_fingerprint(ModelId("c"), c, Selector::all(), dim, seed);
        double sub = 0.0;
        for (std::size_t k = 0; k < dim; ++k) sub += (fp.values[k] - fc.values[k]) * (fp.values[k] - fc.values[k]);
        CHECK(sub * static_cast<double>(n) / static_cast<double>(dim) == doctest::Approx(full).epsilon(0.20));
        CHECK(sub == doctest::Approx(static_cast<double>(dim) * eps * eps).epsilon(0.20));
    }
}

TEST_CASE("quantization detection") {
    CHECK(detect_quantization(DTypeTag::I8, 0.9).quantized);
    CHECK(detect_quantization(DTypeTag::I8, 0.9).reason == QuantizationReason::LowPrecisionDtype);
    CHECK(detect_quantization(DTypeTag::I4, 1.0).reason == QuantizationReason::LowPrecisionDtype);
    CHECK_FALSE(detect_quantization(DTypeTag::F32, 0.97).quantized);
    CHECK(detect_quantization(DTypeTag::F32, 0.97).reason == QuantizationReason::None);
    CHECK_FALSE(detect_quantization(DTypeTag::F16, 0.8).quantized);  // half precision alone is not enough
    CHECK(detect_quantization(DTypeTag::F32, 0.01).reason == QuantizationReason::LowUniqueRatio);
    CHECK(detect_quantization(DTypeTag::F32, 0.01, 0.005).quantized == false);

    SUBCASE("F16 rounded to 256 levels over 10^6 weights") {
        const std::size_t n = 1000000;
        auto w = gaussian(n, 21);
        float lo = w[0], hi = w[0];
        for (float x : w) lo = std::min(lo, x), hi = std::max(hi, x);
        for (auto& x : w) x = lo + std::round((x - lo) / (hi - lo) * 255.0f) * (hi - lo) / 255.0f;
        WeightContainer c;
        c.add_f16("w", {static_cast<std::int64_t>(n)}, w);
        const double ratio = unique_ratio(c, Selector::all(), 0);
        CHECK(ratio <= 256.0 / static_cast<double>(kUniqueRatioSample));
        auto v = detect_quantization(c);
        CHECK(v.quantized);
        CHECK(v.reason == QuantizationReason::LowUniqueRatio);
    }
    SUBCASE("b-bit rounding of generator containers is always flagged") {
        for (int bits : {2, 4, 8}) {
            for (std::uint64_t seed = 1; seed <= 3; ++seed) {
                auto c = random_container(20000, seed);
                CHECK_FALSE(detect_quantization(c).quantized);
                CHECK(detect_quantization(quantize_b_bits(c, bits)).quantized);
            }
        }
    }
    SUBCASE("dominant dtype is element weighted") {
        WeightContainer c;
        c.add_i8("big", {300}, std::vector<std::int8_t>(300, 1));
        c.add_f32("small", {100}, gaussian(100, 3));
        CHECK(dominant_dtype(c, Selector::all()) == DTypeTag::I8);
        CHECK(dominant_dtype(c, Selector::parse("small")) == DTypeTag::F32);
    }
}

TEST_CASE("fingerprint JSONL") {
    Fingerprint fp{ModelId("org/a"), 3, {0.1, -2.5, 1e-300}, DTypeTag::BF16, 0.25, "attn|4096", 77};
    auto line = fingerprint_to_json_line(fp);
    CHECK(fingerprint_from_json_line(line) == fp);
    CHECK(code_of([] { fingerprint_from_json_line("{\"id\": \"x\"}"); }) == ErrorCode::MalformedRecord);
    CHECK(code_of([] { fingerprint_from_json_line("{\"id\":\"x\",\"dim\":2,\"values\":[1],\"dtype_tag\":\"F32\","
                                                  "\"unique_ratio\":1,\"selector\":\"*\",\"seed\":0}"); }) ==
          ErrorCode::MalformedRecord);

    std::stringstream s;
    save_fingerprints(s, {fp, fp});
    std::string text = s.str() + "not json\n";
    std::istringstream in(text);
    auto load = load_fingerprints(in);
    CHECK(load.fingerprints.size() == 2);
    REQUIRE(load.errors.size() == 1);
    CHECK(load.errors[0].line == 3);
}

TEST_CASE("metadata JSONL") {
    const std::string text =
        R"({"id":"org/a","created_at":100,"downloads":5,"attributes":{"license":"mit"},"metrics":{"score":1.5}})"
        "\n"
        R"({"id":"org/b","created_at":200,"known_parents":["org/a"],"quantized":true})"
        "\n"
        R"({"downloads":3})"
        "\n"
        R"({"id":"org/c"})"
        "\n"
        "\n"
        R"({"id":"org/d","created_at":300,"attributes":{"license":null}})"
        "\n";
    std::istringstream in(text);
    auto load = load_metadata(in);
    REQUIRE(load.nodes.size() == 3);
    REQUIRE(load.errors.size() == 2);
    CHECK(load.errors[0].line == 3);
    CHECK(load.errors[1].line == 4);
    CHECK(load.errors[1].id == "org/c");
    const auto& a = load.nodes[0];
    CHECK(a.downloads == 5);
    CHECK(a.attributes.at("license") == std::optional<std::string>("mit"));
    CHECK(a.metrics.at("score") == std::optional<double>(1.5));
    CHECK_FALSE(a.known_parents.has_value());
    CHECK(load.nodes[1].quantized);
    CHECK(load.nodes[1].known_parents == std::vector<ModelId>{ModelId("org/a")});
    CHECK(load.nodes[2].attributes.count("license") == 1);
    CHECK_FALSE(load.nodes[2].attributes.at("license").has_value());

    std::stringstream out;
    save_metadata(out, load.nodes);
    auto again = load_metadata(out);
    CHECK(again.errors.empty());
    CHECK(again.nodes == load.nodes);
}

TEST_CASE("metadata CSV") {
    const std::string text =
        "id,createdAt,downloads,license,pipeline_tag,metric:score,known_parents,quantized,extra\n"
        "org/a,100,5,mit,text-generation,0.5,,false,zzz\n"
        "org/b,200,,,,,org/a;org/x,true,\n"
        ",300,1,,,,,,\n"
        "\"org/c,d\",400,2,\"apache, 2\",,,,,\n";
    std::istringstream in(text);
    auto load = load_metadata_csv(in);
    REQUIRE(load.nodes.size() == 3);
    REQUIRE(load.errors.size() == 1);
    CHECK(load.errors[0].line == 4);
    CHECK(load.nodes[0].attributes.at("license") == std::optional<std::string>("mit"));
    CHECK(load.nodes[0].metrics.at("score") == std::optional<double>(0.5));
    CHECK(load.nodes[1].known_parents == std::vector<ModelId>{ModelId("org/a"), ModelId("org/x")});
    CHECK(load.nodes[1].quantized);
    CHECK_FALSE(load.nodes[1].attributes.at("license").has_value());
    CHECK(load.nodes[2].id.str() == "org/c,d");
    CHECK(load.nodes[2].attributes.at("license") == std::optional<std::string>("apache, 2"));

    std::stringstream out;
    save_metadata_csv(out, load.nodes);
    auto again = load_metadata_csv(out);
    CHECK(again.errors.empty());
    CHECK(again.nodes == load.nodes);
}

TEST_CASE("generator metadata round-trips through JSONL") {
    SyntheticSpec spec;
    spec.seed = 4;
    auto corpus = generate(spec);
    REQUIRE(corpus.metadata.size() == 1000);
    std::stringstream s;
    save_metadata(s, corpus.metadata);
    auto load = load_metadata(s);
    CHECK(load.errors.empty());
    CHECK(load.nodes == corpus.metadata);
}
