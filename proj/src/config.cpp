#include "pd/config.h"

#include <fstream>

#include <json.hpp>

#include "pd/errors.h"

namespace pd {

namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(path + ": config root must be an object");
    return doc;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) throw ConfigError(where + ": unknown key \"" + item.key() + "\"");
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": bad value for \"" + key + "\"");
    }
}

}  // namespace

AppConfig load_config(const std::string& path) {
    const json doc = parse_file(path);
    check_keys(doc,
               {"dt", "iterations", "gravity", "density", "frames", "stride", "constraints"},
               path);

    AppConfig config;
    config.solver.dt = get_or(doc, "dt", config.solver.dt, path);
    config.solver.iterations = get_or(doc, "iterations", config.solver.iterations, path);
    config.solver.density = get_or(doc, "density", config.solver.density, path);
    if (doc.contains("gravity")) {
        const auto g = get_or(doc, "gravity", std::vector<double>{}, path);
        if (g.size() != 3) throw ConfigError(path + ": \"gravity\" must have 3 entries");
        config.solver.gravity = Vector3(g[0], g[1], g[2]);
    }
    config.frames = get_or(doc, "frames", config.frames, path);
    config.stride = get_or(doc, "stride", config.stride, path);

    if (doc.contains("constraints")) {
        const json& c = doc.at("constraints");
        if (!c.is_object()) throw ConfigError(path + ": \"constraints\" must be an object");
        check_keys(c,
                   {"tet_strain", "tet_weight", "edge_spring", "edge_weight", "anchors",
                    "anchor_weight", "allow_unconstrained"},
                   path + ": constraints");
        ConstraintConfig& cc = config.constraints;
        cc.tet_strain = get_or(c, "tet_strain", cc.tet_strain, path);
        cc.tet_weight = get_or(c, "tet_weight", cc.tet_weight, path);
        cc.edge_spring = get_or(c, "edge_spring", cc.edge_spring, path);
        cc.edge_weight = get_or(c, "edge_weight", cc.edge_weight, path);
        cc.anchors = get_or(c, "anchors", cc.anchors, path);
        cc.anchor_weight = get_or(c, "anchor_weight", cc.anchor_weight, path);
        cc.allow_unconstrained = get_or(c, "allow_unconstrained", cc.allow_unconstrained, path);
    }

    config.solver.validate();
    if (config.frames < 1)
        throw ConfigError(path + ": \"frames\" must be at least 1");
    if (config.stride < 1)
        throw ConfigError(path + ": \"stride\" must be at least 1");
    return config;
}

uint64_t config_hash(const std::string& path) {
    const std::string canonical = parse_file(path).dump();
    uint64_t hash = 14695981039346656037ull;
    for (const unsigned char c : canonical) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

}  // namespace pd
