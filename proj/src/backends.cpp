#include "infra/backends.hpp"

#include <charconv>

namespace infra {

using nlohmann::json;

namespace {

std::int64_t parse_int(std::string_view s, const char* what) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw BackendConfigError(std::string("backend: bad ") + what + " '" + std::string(s) + "'");
    return v;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

ParamOverrides overrides_from(const json& cfg) {
    ParamOverrides o;
    auto real = [&](const char* key, std::optional<ScaledReal>& dst) {
        if (!cfg.contains(key)) return;
        const auto& v = cfg.at(key);
        dst = v.is_string() ? ScaledReal::parse(v.get<std::string>()) : ScaledReal::from_double(v.get<double>());
    };
    real("d_min", o.d_min_lower);
    real("d_max", o.d_max_upper);
    real("d_k_bar", o.d_k_bar);
    real("R_upper", o.R_upper);
    if (cfg.contains("k_bar")) o.k_bar = cfg.at("k_bar").get<int>();
    return o;
}

}  // namespace

json backend_json(std::string_view spec) {
    const auto colon = spec.find(':');
    if (!spec.empty() && spec.front() == '{') {
        try {
            return json::parse(spec);
        } catch (const json::exception& e) {
            throw BackendConfigError(std::string("backend: invalid JSON: ") + e.what());
        }
    }
    if (colon == std::string_view::npos) throw BackendConfigError("backend: expected <type>:<args> or a JSON object");
    const std::string_view type = spec.substr(0, colon), arg = spec.substr(colon + 1);
    if (type == "cyclic") return {{"type", "cyclic"}, {"order", parse_int(arg, "order")}};
    if (type == "quadratic") return {{"type", "quadratic"}, {"D", parse_int(arg, "discriminant")}};
    if (type == "synthetic") return {{"type", "synthetic"}, {"gaps", split(arg, ',')}};
    throw BackendConfigError("backend: unknown type '" + std::string(type) + "'");
}

std::shared_ptr<const Infrastructure> make_backend_json(const json& cfg) {
    if (!cfg.is_object() || !cfg.contains("type")) throw BackendConfigError("backend: object with a \"type\" field expected");
    try {
        const std::string type = cfg.at("type").get<std::string>();
        std::shared_ptr<const ExactInfrastructure> exact;
        if (type == "cyclic") {
            exact = std::make_shared<CyclicInfra>(cfg.at("order").get<std::int64_t>());
        } else if (type == "synthetic") {
            std::vector<ScaledReal> gaps;
            for (const auto& g : cfg.at("gaps"))
                gaps.push_back(g.is_string() ? ScaledReal::parse(g.get<std::string>())
                                             : ScaledReal::from_double(g.get<double>()));
            exact = std::make_shared<SyntheticInfra>(std::move(gaps), overrides_from(cfg));
        } else if (type == "quadratic") {
            if (cfg.contains("perturb")) throw BackendConfigError("backend: perturb needs an exact backend");
            return std::make_shared<QuadraticInfra>(cfg.at("D").get<std::int64_t>());
        } else {
            throw BackendConfigError("backend: unknown type '" + type + "'");
        }
        if (cfg.contains("perturb"))
            return std::make_shared<PerturbedInfra>(exact, cfg.at("perturb").get<std::uint64_t>());
        return exact;
    } catch (const json::exception& e) {
        throw BackendConfigError(std::string("backend: ") + e.what());
    }
}

std::shared_ptr<const Infrastructure> make_backend(std::string_view spec) { return make_backend_json(backend_json(spec)); }

Element parse_element_spec(const Infrastructure& infra, std::string_view spec) {
    if (spec == "origin") return infra.origin();
    if (spec.starts_with("bs^")) {
        const std::int64_t k = parse_int(spec.substr(3), "baby-step count");
        if (k < 0) throw MalformedElement("element: negative baby-step count");
        Element x = infra.origin();
        for (std::int64_t i = 0; i < k; ++i) x = infra.bs(x);
        return x;
    }
    return infra.parse_element(spec);
}

}  // namespace infra
