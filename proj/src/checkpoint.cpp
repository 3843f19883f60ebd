#include "axonad/checkpoint.hpp"

#include "axonad/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

namespace axonad {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

[[noreturn]] void corrupt(const std::string& what) { fail(ErrorCode::checkpoint, "checkpoint: " + what); }

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::string_view in) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(in[std::size_t(i)])) << (8 * i);
    return v;
}

json row_json(const RowVec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

RowVec row_from_json(const json& a, const char* what) {
    if (!a.is_array()) corrupt(std::string(what) + " must be an array");
    RowVec v(Eigen::Index(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) corrupt(std::string(what) + " must hold numbers");
        v[Eigen::Index(i)] = a[i].get<double>();
    }
    return v;
}

void add_manifest(json& manifest, const ParamSet& set, const char* set_name, std::uint64_t& offset) {
    for (const auto& p : set) {
        const std::uint64_t count = p.value.size();
        manifest.push_back({{"set", set_name},
                            {"name", p.name},
                            {"shape", p.value.shape()},
                            {"decay", p.decay},
                            {"offset", offset},
                            {"count", count}});
        offset += count * sizeof(float);
    }
}

void append_payload(std::string& out, const ParamSet& set) {
    for (const auto& p : set) {
        for (double v : p.value.data()) {
            const float f = float(v);
            char buf[sizeof(float)];
            std::memcpy(buf, &f, sizeof(float));
            out.append(buf, sizeof(float));
        }
    }
}

}  // namespace

void round_to_float32(Model& m) {
    for (ParamSet* set : {&m.online(), &m.target()})
        for (auto& p : *set)
            for (double& v : p.value.data()) v = double(float(v));
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    json manifest = json::array();
    std::uint64_t payload_bytes = 0;
    add_manifest(manifest, ckpt.model.online(), "online", payload_bytes);
    add_manifest(manifest, ckpt.model.target(), "target", payload_bytes);

    const json header{{"format_version", kCheckpointFormatVersion},
                      {"config", to_json(ckpt.config)},
                      {"calibration", to_json(ckpt.calibration)},
                      {"normalizer", {{"mean", row_json(ckpt.normalizer.mean)}, {"std", row_json(ckpt.normalizer.std)}}},
                      {"split",
                       {{"val_start", ckpt.split.val_start},
                        {"train_end", ckpt.split.train_end},
                        {"test_start", ckpt.split.test_start}}},
                      {"payload_bytes", payload_bytes},
                      {"arrays", manifest}};
    const std::string text = header.dump();

    std::string out;
    out.reserve(kCheckpointMagic.size() + 8 + text.size() + payload_bytes);
    out.append(kCheckpointMagic);
    put_u64(out, text.size());
    out.append(text);
    append_payload(out, ckpt.model.online());
    append_payload(out, ckpt.model.target());
    return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
    const std::size_t prefix = kCheckpointMagic.size() + 8;
    if (bytes.size() < prefix || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic)
        corrupt("bad magic, expected \"AXAD1\"");
    const std::uint64_t header_len = get_u64(bytes.substr(kCheckpointMagic.size(), 8));
    if (header_len > bytes.size() - prefix) corrupt("header length exceeds file size");

    json header;
    try {
        header = json::parse(bytes.substr(prefix, std::size_t(header_len)));
    } catch (const json::parse_error& e) {
        corrupt(std::string("header is not valid JSON: ") + e.what());
    }
    if (!header.is_object() || header.value("format_version", -1) != kCheckpointFormatVersion)
        corrupt("unsupported format version");

    const std::string_view payload = bytes.substr(prefix + std::size_t(header_len));
    RunConfig config;
    Calibration calibration;
    Normalizer normalizer;
    SplitSpec split;
    ParamSet online, target;
    try {
        config = run_config_from_json(header.at("config"));
        calibration = calibration_from_json(header.at("calibration"));
        normalizer.mean = row_from_json(header.at("normalizer").at("mean"), "normalizer.mean");
        normalizer.std = row_from_json(header.at("normalizer").at("std"), "normalizer.std");
        const json& s = header.at("split");
        split = {s.at("val_start").get<std::int64_t>(), s.at("train_end").get<std::int64_t>(),
                 s.at("test_start").get<std::int64_t>()};

        if (header.at("payload_bytes").get<std::uint64_t>() != payload.size())
            corrupt("payload size does not match the header");
        std::uint64_t expected_offset = 0;
        for (const json& a : header.at("arrays")) {
            const auto offset = a.at("offset").get<std::uint64_t>();
            const auto count = a.at("count").get<std::uint64_t>();
            const auto shape = a.at("shape").get<std::vector<std::size_t>>();
            std::uint64_t product = 1;
            for (auto d : shape) product *= d;
            if (offset != expected_offset || product != count)
                corrupt("manifest entry '" + a.at("name").get<std::string>() + "' is inconsistent");
            if (offset + count * sizeof(float) > payload.size()) corrupt("payload is truncated");
            std::vector<double> data(count);
            for (std::uint64_t i = 0; i < count; ++i) {
                float f;
                std::memcpy(&f, payload.data() + offset + i * sizeof(float), sizeof(float));
                data[i] = f;
            }
            expected_offset = offset + count * sizeof(float);
            const auto set = a.at("set").get<std::string>();
            ParamSet* dst = set == "online" ? &online : set == "target" ? &target : nullptr;
            if (!dst) corrupt("unknown parameter set '" + set + "'");
            dst->add(a.at("name").get<std::string>(), Tensor(shape, std::move(data)), a.at("decay").get<bool>());
        }
        if (expected_offset != payload.size()) corrupt("payload has trailing bytes");
    } catch (const json::exception& e) {
        corrupt(std::string("malformed header: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::checkpoint) throw;
        corrupt(e.what());
    }
    if (!online.all_finite() || !target.all_finite()) corrupt("non-finite parameters");
    if (normalizer.mean.size() != config.model.channels || normalizer.std.size() != config.model.channels)
        corrupt("normalizer width does not match the channel count");

    Model model = [&] {
        try {
            return Model(config.model, std::move(online), std::move(target));
        } catch (const Error& e) {
            corrupt(e.what());
        }
    }();
    return Checkpoint{std::move(config), std::move(model), calibration, std::move(normalizer), split};
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace axonad
