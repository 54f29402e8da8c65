#pragma once

#include "infra/quad_field.hpp"

#include <json.hpp>

#include <memory>

namespace infra {

class BackendConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/**
 * Builds a backend from "cyclic:12", "quadratic:13", "synthetic:3/5,11/10,4/5"
 * or a JSON object such as {"type":"synthetic","gaps":["3/5","11/10"]}.
 * JSON objects may add "perturb": <salt> on exact backends.
 */
std::shared_ptr<const Infrastructure> make_backend(std::string_view spec);
std::shared_ptr<const Infrastructure> make_backend_json(const nlohmann::json& cfg);

/** Canonical JSON form of a backend spec string. */
nlohmann::json backend_json(std::string_view spec);

/**
 * Element spec: "origin", "bs^k" (k >= 0 baby steps from the origin), or the
 * backend's own notation ("g^5", "x2", "(3,4)").
 */
Element parse_element_spec(const Infrastructure& infra, std::string_view spec);

}  // namespace infra
