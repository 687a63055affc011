#include "config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "errors.hpp"
#include "io_util.hpp"

namespace meshguard {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const char* what) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded())
        fail(ErrorKind::Parse, std::string("malformed JSON in ") + what);
    if (!doc.is_object())
        fail(ErrorKind::Parse, std::string(what) + " must be a JSON object");
    return doc;
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const char* where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.count(key))
            fail(ErrorKind::Argument,
                 std::string("unknown field '") + key + "' in " + where);
    }
}

double require_number(const json& obj, const char* key, const char* where) {
    if (!obj.contains(key) || !obj[key].is_number())
        fail(ErrorKind::Argument,
             std::string("missing or non-numeric field '") + key + "' in " + where);
    return obj[key].get<double>();
}

ThresholdPolicy parse_policy(const json& obj) {
    if (!obj.is_object())
        fail(ErrorKind::Argument, "threshold_policy must be an object");
    reject_unknown(obj, {"kind", "alpha_thr", "nu"}, "threshold_policy");
    if (!obj.contains("kind") || !obj["kind"].is_string())
        fail(ErrorKind::Argument, "threshold_policy.kind must be a string");
    ThresholdPolicy policy;
    const std::string kind = obj["kind"].get<std::string>();
    if (kind == "global")
        policy.kind = PolicyKind::Global;
    else if (kind == "relative")
        policy.kind = PolicyKind::Relative;
    else if (kind == "combined")
        policy.kind = PolicyKind::Combined;
    else
        fail(ErrorKind::Argument,
             "threshold_policy.kind must be 'global', 'relative' or 'combined'");
    if (policy.kind != PolicyKind::Relative)
        policy.alpha_thr = require_number(obj, "alpha_thr", "threshold_policy");
    if (policy.kind != PolicyKind::Global)
        policy.nu = require_number(obj, "nu", "threshold_policy");
    return policy;
}

std::vector<std::string> parse_groups(const json& obj, const char* key) {
    std::vector<std::string> groups;
    if (!obj.contains(key)) return groups;
    if (!obj[key].is_array())
        fail(ErrorKind::Argument, std::string(key) + " must be an array of group names");
    for (const auto& g : obj[key]) {
        if (!g.is_string())
            fail(ErrorKind::Argument, std::string(key) + " entries must be strings");
        groups.push_back(g.get<std::string>());
    }
    return groups;
}

FunctionalTerm parse_term(const json& obj) {
    if (!obj.is_object() || !obj.contains("type") || !obj["type"].is_string())
        fail(ErrorKind::Argument, "functional term must be an object with a 'type'");
    const std::string type = obj["type"].get<std::string>();
    if (type == "volume") {
        reject_unknown(obj, {"type", "target", "weight"}, "volume term");
        VolumeTerm term;
        term.weight = require_number(obj, "weight", "volume term");
        term.target = obj.contains("target") ? require_number(obj, "target", "volume term")
                                             : std::nan("");
        return term;
    }
    if (type == "barycenter") {
        reject_unknown(obj, {"type", "target", "weight"}, "barycenter term");
        BarycenterTerm term;
        term.weight = require_number(obj, "weight", "barycenter term");
        if (obj.contains("target")) {
            if (!obj["target"].is_array())
                fail(ErrorKind::Argument, "barycenter target must be an array");
            for (const auto& v : obj["target"]) term.target.push_back(v.get<double>());
        }
        return term;
    }
    if (type == "perimeter") {
        reject_unknown(obj, {"type", "weight"}, "perimeter term");
        PerimeterTerm term;
        term.weight = require_number(obj, "weight", "perimeter term");
        return term;
    }
    if (type == "target_distance") {
        reject_unknown(obj, {"type", "weight", "boundary_group", "reference"},
                       "target_distance term");
        TargetDistanceTerm term;
        term.weight = require_number(obj, "weight", "target_distance term");
        if (obj.contains("boundary_group"))
            term.boundary_group = obj["boundary_group"].get<std::string>();
        if (!obj.contains("reference") || !obj["reference"].is_object())
            fail(ErrorKind::Argument, "target_distance term needs a 'reference' object");
        const json& ref = obj["reference"];
        if (!ref.contains("kind") || !ref["kind"].is_string())
            fail(ErrorKind::Argument, "reference.kind must be a string");
        const std::string kind = ref["kind"].get<std::string>();
        if (kind == "star") {
            reject_unknown(ref, {"kind", "center", "radius", "amplitude", "lobes"},
                           "star reference");
            StarReference star;
            if (ref.contains("center")) {
                star.center[0] = ref["center"].at(0).get<double>();
                star.center[1] = ref["center"].at(1).get<double>();
            }
            star.radius = require_number(ref, "radius", "star reference");
            star.amplitude = require_number(ref, "amplitude", "star reference");
            star.lobes = static_cast<int>(require_number(ref, "lobes", "star reference"));
            term.reference = star;
        } else if (kind == "ellipsoid") {
            reject_unknown(ref, {"kind", "center", "semi_axes"}, "ellipsoid reference");
            EllipsoidReference ell;
            if (ref.contains("center"))
                for (int k = 0; k < 3; ++k) ell.center[k] = ref["center"].at(k).get<double>();
            if (!ref.contains("semi_axes"))
                fail(ErrorKind::Argument, "ellipsoid reference needs 'semi_axes'");
            for (int k = 0; k < 3; ++k) ell.semi_axes[k] = ref["semi_axes"].at(k).get<double>();
            term.reference = ell;
        } else {
            fail(ErrorKind::Argument, "reference.kind must be 'star' or 'ellipsoid'");
        }
        return term;
    }
    fail(ErrorKind::Argument, "unknown functional term type '" + type + "'");
}

}  // namespace

OptimizeOptions RunConfig::optimize_options() const {
    OptimizeOptions options;
    options.t0 = t_0;
    options.sigma = sigma;
    options.omega = omega;
    options.tau_stop = tau_stop;
    options.n_max = n_max;
    options.constraints_enabled = constraints_enabled;
    options.method = method;
    options.lbfgs_memory = lbfgs_memory;
    options.kkt_tolerance = kkt_tolerance;
    options.threads = threads;
    return options;
}

PolicyConfig parse_policy_config(const std::string& json_text) {
    const json doc = parse_json(json_text, "policy configuration");
    reject_unknown(doc, {"threshold_policy", "epsilon", "fixed_boundary_groups"},
                   "policy configuration");
    PolicyConfig config;
    if (!doc.contains("threshold_policy"))
        fail(ErrorKind::Argument, "policy configuration needs 'threshold_policy'");
    config.policy = parse_policy(doc["threshold_policy"]);
    if (doc.contains("epsilon")) config.epsilon = require_number(doc, "epsilon", "policy");
    if (!(config.epsilon > 0.0)) fail(ErrorKind::Argument, "epsilon must be > 0");
    config.fixed_boundary_groups = parse_groups(doc, "fixed_boundary_groups");
    return config;
}

RunConfig parse_run_config(const std::string& json_text) {
    const json doc = parse_json(json_text, "run configuration");
    reject_unknown(doc,
                   {"mesh_path", "fixed_boundary_groups", "threshold_policy", "epsilon",
                    "elasticity", "functional", "method", "t_0", "sigma", "omega", "tau_stop",
                    "n_max", "constraints_enabled", "kkt_tolerance", "output_dir", "threads",
                    "write_every"},
                   "run configuration");
    RunConfig config;
    if (!doc.contains("mesh_path") || !doc["mesh_path"].is_string())
        fail(ErrorKind::Argument, "run configuration needs a 'mesh_path' string");
    config.mesh_path = doc["mesh_path"].get<std::string>();
    config.fixed_boundary_groups = parse_groups(doc, "fixed_boundary_groups");
    if (!doc.contains("threshold_policy"))
        fail(ErrorKind::Argument, "run configuration needs 'threshold_policy'");
    config.threshold_policy = parse_policy(doc["threshold_policy"]);
    if (doc.contains("epsilon")) config.epsilon = require_number(doc, "epsilon", "run config");
    if (!(config.epsilon > 0.0)) fail(ErrorKind::Argument, "epsilon must be > 0");

    if (doc.contains("elasticity")) {
        const json& el = doc["elasticity"];
        reject_unknown(el, {"mu", "lambda", "delta", "inverse_volume_weighting"}, "elasticity");
        if (el.contains("mu")) config.elasticity.mu = el["mu"].get<double>();
        if (el.contains("lambda")) config.elasticity.lambda = el["lambda"].get<double>();
        if (el.contains("delta")) config.elasticity.delta = el["delta"].get<double>();
        if (el.contains("inverse_volume_weighting"))
            config.elasticity.inverse_volume_weighting =
                el["inverse_volume_weighting"].get<bool>();
    }

    if (!doc.contains("functional") || !doc["functional"].is_object() ||
        !doc["functional"].contains("terms") || !doc["functional"]["terms"].is_array())
        fail(ErrorKind::Argument, "run configuration needs functional.terms");
    for (const auto& term : doc["functional"]["terms"])
        config.functional.terms.push_back(parse_term(term));

    if (doc.contains("method")) {
        const json& method = doc["method"];
        reject_unknown(method, {"kind", "memory"}, "method");
        const std::string kind = method.value("kind", "gradient_descent");
        if (kind == "gradient_descent") {
            config.method = SearchMethod::GradientDescent;
        } else if (kind == "lbfgs") {
            config.method = SearchMethod::Lbfgs;
            if (method.contains("memory")) config.lbfgs_memory = method["memory"].get<int>();
            if (config.lbfgs_memory < 1)
                fail(ErrorKind::Argument, "lbfgs memory must be >= 1");
        } else {
            fail(ErrorKind::Argument, "method.kind must be 'gradient_descent' or 'lbfgs'");
        }
    }

    if (doc.contains("t_0")) config.t_0 = require_number(doc, "t_0", "run config");
    if (doc.contains("sigma")) config.sigma = require_number(doc, "sigma", "run config");
    if (doc.contains("omega")) config.omega = require_number(doc, "omega", "run config");
    if (doc.contains("tau_stop")) config.tau_stop = require_number(doc, "tau_stop", "run config");
    if (doc.contains("n_max")) config.n_max = static_cast<long>(doc["n_max"].get<double>());
    if (doc.contains("constraints_enabled"))
        config.constraints_enabled = doc["constraints_enabled"].get<bool>();
    if (doc.contains("kkt_tolerance"))
        config.kkt_tolerance = require_number(doc, "kkt_tolerance", "run config");
    if (doc.contains("output_dir")) config.output_dir = doc["output_dir"].get<std::string>();
    if (doc.contains("threads")) config.threads = static_cast<int>(doc["threads"].get<double>());
    if (doc.contains("write_every"))
        config.write_every = static_cast<int>(doc["write_every"].get<double>());

    if (!(config.t_0 > 0.0)) fail(ErrorKind::Argument, "t_0 must be > 0");
    if (!(config.sigma > 0.0 && config.sigma < 1.0))
        fail(ErrorKind::Argument, "sigma must lie in (0, 1)");
    if (!(config.omega > 0.0 && config.omega < 1.0))
        fail(ErrorKind::Argument, "omega must lie in (0, 1)");
    if (!(config.tau_stop > 0.0 && config.tau_stop < 1.0))
        fail(ErrorKind::Argument, "tau_stop must lie in (0, 1)");
    if (config.n_max < 0) fail(ErrorKind::Argument, "n_max must be >= 0");
    if (config.threads < 1) fail(ErrorKind::Argument, "threads must be >= 1");
    return config;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_file(path));
}

void resolve_functional_targets(FunctionalSpec& spec, const Mesh& mesh) {
    for (auto& term : spec.terms) {
        if (auto* vol = std::get_if<VolumeTerm>(&term)) {
            if (std::isnan(vol->target)) vol->target = mesh_volume(mesh);
        } else if (auto* bc = std::get_if<BarycenterTerm>(&term)) {
            if (bc->target.empty()) {
                const double volume = mesh_volume(mesh);
                const int dim = mesh.dim();
                std::vector<double> moment(dim, 0.0);
                for (long c = 0; c < mesh.cell_count(); ++c) {
                    const double m = mesh.cell_measure(c);
                    const auto nodes = mesh.cell(c);
                    for (int k = 0; k < dim; ++k) {
                        double centroid = 0.0;
                        for (int v = 0; v <= dim; ++v)
                            centroid += mesh.coords()[nodes[v] * dim + k];
                        moment[k] += m * centroid / (dim + 1);
                    }
                }
                bc->target.resize(dim);
                for (int k = 0; k < dim; ++k) bc->target[k] = moment[k] / volume;
            }
        }
    }
}

}  // namespace meshguard
