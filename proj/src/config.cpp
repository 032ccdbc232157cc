#include "mmq/config.hpp"

#include "mmq/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace mmq {

namespace {

using json = nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) throw Error(ErrorCode::UnknownField, join(path, key));
    }
}

const json& object_at(const json& doc, const std::string& key, const std::string& path) {
    const json& v = doc.at(key);
    if (!v.is_object()) throw Error(ErrorCode::ParseError, join(path, key) + ": expected an object");
    return v;
}

const json* optional_field(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& required_field(const json& obj, const char* key, const std::string& path) {
    const json* v = optional_field(obj, key);
    if (!v) throw Error(ErrorCode::MissingRequired, join(path, key));
    return *v;
}

double as_double(const json& v, const std::string& where) {
    if (!v.is_number()) throw Error(ErrorCode::ParseError, where + ": expected a number");
    return v.get<double>();
}

std::int64_t as_int(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw Error(ErrorCode::ParseError, where + ": expected an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
        throw Error(ErrorCode::ParseError, where + ": integer out of range");
    return v.get<std::int64_t>();
}

std::uint64_t as_u64(const json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw Error(ErrorCode::ParseError, where + ": expected an unsigned 64-bit integer");
}

std::int64_t as_positive(const json& v, const std::string& where) {
    const std::int64_t x = as_int(v, where);
    if (x < 1) throw Error(ErrorCode::InvalidArgument, where + " must be at least 1");
    return x;
}

const json& as_array(const json& v, const std::string& where) {
    if (!v.is_array()) throw Error(ErrorCode::ParseError, where + ": expected an array");
    return v;
}

Vector as_vector(const json& v, const std::string& where) {
    const json& arr = as_array(v, where);
    Vector out(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = as_double(arr[i], where + "[" + std::to_string(i) + "]");
    return out;
}

Matrix as_matrix(const json& v, const std::string& where) {
    const json& rows = as_array(v, where);
    if (rows.empty()) return Matrix(0, 0);
    const std::size_t cols = as_array(rows[0], where + "[0]").size();
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Vector row = as_vector(rows[i], where + "[" + std::to_string(i) + "]");
        if (static_cast<std::size_t>(row.size()) != cols)
            throw Error(ErrorCode::DimensionMismatch, where + ": ragged rows");
        out.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return out;
}

/// mu[from][to] is a list of per-state rates.
RateTensor as_tensor(const json& v, const std::string& where, int states) {
    const json& outer = as_array(v, where);
    const int L = static_cast<int>(outer.size());
    RateTensor out(L, states);
    for (int k = 0; k < L; ++k) {
        const std::string wk = where + "[" + std::to_string(k) + "]";
        const json& row = as_array(outer[static_cast<std::size_t>(k)], wk);
        if (static_cast<int>(row.size()) != L) throw Error(ErrorCode::DimensionMismatch, wk + ": expected " + std::to_string(L) + " entries");
        for (int l = 0; l < L; ++l) {
            const std::string wl = wk + "[" + std::to_string(l) + "]";
            const Vector rates = as_vector(row[static_cast<std::size_t>(l)], wl);
            if (rates.size() != states)
                throw Error(ErrorCode::DimensionMismatch, wl + ": expected " + std::to_string(states) + " states");
            for (int i = 0; i < states; ++i) out(k, l, i) = rates(i);
        }
    }
    return out;
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return rows;
}

json tensor_json(const RateTensor& t) {
    json outer = json::array();
    for (int k = 0; k < t.queues(); ++k) {
        json row = json::array();
        for (int l = 0; l < t.queues(); ++l) {
            std::vector<double> rates(static_cast<std::size_t>(t.states()));
            for (int i = 0; i < t.states(); ++i) rates[static_cast<std::size_t>(i)] = t(k, l, i);
            row.push_back(rates);
        }
        outer.push_back(row);
    }
    return outer;
}

void check_declared(const json& block, const char* key, const std::string& path, std::int64_t actual) {
    if (const json* v = optional_field(block, key)) {
        const std::int64_t declared = as_int(*v, join(path, key));
        if (declared != actual)
            throw Error(ErrorCode::DimensionMismatch, join(path, key) + " is " + std::to_string(declared) +
                                                          " but the arrays imply " + std::to_string(actual));
    }
}

NetworkSpec parse_network(const json& block) {
    const std::string path = "network";
    reject_unknown(block, path, {"d", "L", "generator", "lambda", "mu", "lambda_hat", "mu_hat", "sink"});
    RawNetwork raw;
    raw.generator = as_matrix(required_field(block, "generator", path), "network.generator");
    const int d = static_cast<int>(raw.generator.rows());
    check_declared(block, "d", path, d);
    raw.lambda = as_matrix(required_field(block, "lambda", path), "network.lambda");
    raw.mu = as_tensor(required_field(block, "mu", path), "network.mu", d);
    if (const json* v = optional_field(block, "lambda_hat")) raw.lambda_hat = as_matrix(*v, "network.lambda_hat");
    if (const json* v = optional_field(block, "mu_hat")) raw.mu_hat = as_tensor(*v, "network.mu_hat", d);
    if (const json* v = optional_field(block, "sink")) {
        const json& arr = as_array(*v, "network.sink");
        for (std::size_t k = 0; k < arr.size(); ++k) {
            if (!arr[k].is_boolean()) throw Error(ErrorCode::ParseError, "network.sink[" + std::to_string(k) + "]: expected a boolean");
            raw.sink.push_back(arr[k].get<bool>());
        }
    }
    check_declared(block, "L", path, raw.mu.queues());
    if (raw.lambda.rows() != raw.mu.queues())
        throw Error(ErrorCode::DimensionMismatch, "network.lambda has " + std::to_string(raw.lambda.rows()) +
                                                      " rows but network.mu has " + std::to_string(raw.mu.queues()) +
                                                      " queues");
    return validate_network(std::move(raw));
}

Model3Spec parse_model3(const json& block) {
    const std::string path = "model3";
    reject_unknown(block, path, {"d", "generator", "lambda_star", "kappa_star", "mu_star"});
    const Matrix generator = as_matrix(required_field(block, "generator", path), "model3.generator");
    check_declared(block, "d", path, generator.rows());
    return validate_model3(generator, as_vector(required_field(block, "lambda_star", path), "model3.lambda_star"),
                           as_vector(required_field(block, "kappa_star", path), "model3.kappa_star"),
                           as_vector(required_field(block, "mu_star", path), "model3.mu_star"));
}

void parse_scaling(const json& block, ScalingBlock& s) {
    const std::string path = "scaling";
    reject_unknown(block, path, {"alpha", "n", "n_list", "init_rule", "rho0"});
    if (const json* v = optional_field(block, "alpha")) s.alpha = as_double(*v, "scaling.alpha");
    if (!(s.alpha > 0.0) || !std::isfinite(s.alpha)) throw Error(ErrorCode::NonpositiveAlpha, "scaling.alpha must be positive");
    if (const json* v = optional_field(block, "n")) s.n = as_positive(*v, "scaling.n");
    if (const json* v = optional_field(block, "n_list")) {
        const json& arr = as_array(*v, "scaling.n_list");
        for (std::size_t i = 0; i < arr.size(); ++i)
            s.n_list.push_back(as_positive(arr[i], "scaling.n_list[" + std::to_string(i) + "]"));
        for (std::size_t i = 1; i < s.n_list.size(); ++i)
            if (s.n_list[i] <= s.n_list[i - 1])
                throw Error(ErrorCode::InvalidArgument, "scaling.n_list must be strictly increasing");
    }
    if (const json* v = optional_field(block, "init_rule")) {
        if (!v->is_string()) throw Error(ErrorCode::ParseError, "scaling.init_rule: expected a string");
        const auto rule = v->get<std::string>();
        if (rule == "floor") {
            s.init_rule = InitRule::Floor;
        } else if (rule == "poisson") {
            s.init_rule = InitRule::Poisson;
        } else {
            throw Error(ErrorCode::ParseError, "scaling.init_rule: expected \"floor\" or \"poisson\", got \"" + rule + "\"");
        }
    }
    if (const json* v = optional_field(block, "rho0")) s.rho0 = as_vector(*v, "scaling.rho0");
}

void parse_run(const json& block, RunBlock& r) {
    const std::string path = "run";
    reject_unknown(block, path, {"T", "grid_step", "reps", "seed", "worker_count", "check_times", "population_cap"});
    if (const json* v = optional_field(block, "T")) r.horizon = as_double(*v, "run.T");
    if (const json* v = optional_field(block, "grid_step")) r.grid_step = as_double(*v, "run.grid_step");
    if (!(r.horizon > 0.0) || !(r.grid_step > 0.0))
        throw Error(ErrorCode::InvalidArgument, "run.T and run.grid_step must be positive");
    (void)TimeGrid::covering(r.horizon, r.grid_step);
    if (const json* v = optional_field(block, "reps")) r.reps = static_cast<std::size_t>(as_positive(*v, "run.reps"));
    if (const json* v = optional_field(block, "seed")) r.seed = as_u64(*v, "run.seed");
    if (const json* v = optional_field(block, "worker_count")) {
        const std::int64_t w = as_int(*v, "run.worker_count");
        if (w < 0) throw Error(ErrorCode::InvalidArgument, "run.worker_count must be nonnegative");
        r.worker_count = static_cast<unsigned>(w);
    }
    if (const json* v = optional_field(block, "check_times")) {
        const Vector t = as_vector(*v, "run.check_times");
        r.check_times.assign(t.data(), t.data() + t.size());
    }
    if (const json* v = optional_field(block, "population_cap")) r.population_cap = as_double(*v, "run.population_cap");
}

void parse_tolerance(const json& block, RunConfig& c) {
    const std::string path = "tolerance";
    reject_unknown(block, path,
                   {"fluid_cap", "occupation_relative", "occupation_stderr", "diffusion_relative", "diffusion_stderr",
                    "model3_stderr", "bootstrap_resamples", "psd_tolerance"});
    VerifyTolerances& t = c.tolerance;
    auto take = [&](const char* key, double& slot) {
        if (const json* v = optional_field(block, key)) slot = as_double(*v, join(path, key));
    };
    take("fluid_cap", t.fluid_cap);
    take("occupation_relative", t.occupation_relative);
    take("occupation_stderr", t.occupation_stderr);
    take("diffusion_relative", t.diffusion_relative);
    take("diffusion_stderr", t.diffusion_stderr);
    take("model3_stderr", t.model3_stderr);
    take("psd_tolerance", c.psd_tolerance);
    if (const json* v = optional_field(block, "bootstrap_resamples"))
        t.bootstrap_resamples = static_cast<int>(as_positive(*v, "tolerance.bootstrap_resamples"));
}

void parse_verify(const json& block, RunConfig& c) {
    reject_unknown(block, "verify", {"reference_scale", "fluid_offset"});
    if (const json* v = optional_field(block, "reference_scale"))
        c.overrides.reference_scale = as_double(*v, "verify.reference_scale");
    if (const json* v = optional_field(block, "fluid_offset")) c.overrides.fluid_offset = as_double(*v, "verify.fluid_offset");
}

void parse_output(const json& block, OutputBlock& o) {
    reject_unknown(block, "output", {"directory", "formats", "keep_raw"});
    if (const json* v = optional_field(block, "directory")) {
        if (!v->is_string()) throw Error(ErrorCode::ParseError, "output.directory: expected a string");
        o.directory = v->get<std::string>();
    }
    if (const json* v = optional_field(block, "formats")) {
        o.formats.clear();
        for (const auto& f : as_array(*v, "output.formats")) {
            if (!f.is_string() || (f != "csv" && f != "json"))
                throw Error(ErrorCode::ParseError, "output.formats: entries must be \"csv\" or \"json\"");
            o.formats.push_back(f.get<std::string>());
        }
    }
    if (const json* v = optional_field(block, "keep_raw")) {
        if (!v->is_boolean()) throw Error(ErrorCode::ParseError, "output.keep_raw: expected a boolean");
        o.keep_raw = v->get<bool>();
    }
}

}  // namespace

bool OutputBlock::wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

NetworkSpec RunConfig::spec() const {
    if (network) return *network;
    if (model3) return reduce_model3(*model3);
    throw Error(ErrorCode::MissingRequired, "network");
}

std::vector<std::int64_t> RunConfig::ns() const {
    return scaling.n_list.empty() ? std::vector<std::int64_t>{scaling.n} : scaling.n_list;
}

VerifySettings RunConfig::verify_settings() const {
    VerifySettings s;
    s.alpha = scaling.alpha;
    s.n = scaling.n;
    s.ns = ns();
    s.rho0 = scaling.rho0;
    s.init_rule = scaling.init_rule;
    s.horizon = run.horizon;
    s.grid_step = run.grid_step;
    s.reps = run.reps;
    s.seed = run.seed;
    s.workers = run.worker_count;
    s.check_times = run.check_times;
    s.population_cap = run.population_cap;
    s.keep_raw = output.keep_raw;
    s.tol = tolerance;
    s.overrides = overrides;
    return s;
}

RunConfig config_from_json(const json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::ParseError, "config root must be an object");
    reject_unknown(doc, "", {"schema_version", "network", "model3", "scaling", "run", "tolerance", "verify", "output"});
    RunConfig c;
    c.schema_version = static_cast<int>(as_int(required_field(doc, "schema_version", ""), "schema_version"));
    if (c.schema_version != kSchemaVersion)
        throw Error(ErrorCode::ParseError, "schema_version " + std::to_string(c.schema_version) + " is not supported (expected " +
                                               std::to_string(kSchemaVersion) + ")");
    const bool has_network = doc.contains("network");
    const bool has_model3 = doc.contains("model3");
    if (has_network == has_model3) {
        if (!has_network) throw Error(ErrorCode::MissingRequired, "network");
        throw Error(ErrorCode::InvalidArgument, "config must contain exactly one of network and model3");
    }
    if (has_network) c.network = parse_network(object_at(doc, "network", ""));
    if (has_model3) c.model3 = parse_model3(object_at(doc, "model3", ""));
    if (doc.contains("scaling")) parse_scaling(object_at(doc, "scaling", ""), c.scaling);
    if (doc.contains("run")) parse_run(object_at(doc, "run", ""), c.run);
    if (doc.contains("tolerance")) parse_tolerance(object_at(doc, "tolerance", ""), c);
    if (doc.contains("verify")) parse_verify(object_at(doc, "verify", ""), c);
    if (doc.contains("output")) parse_output(object_at(doc, "output", ""), c.output);

    const NetworkSpec spec = c.spec();
    if (c.scaling.rho0.size() != 0 && c.scaling.rho0.size() != spec.queues())
        throw Error(ErrorCode::DimensionMismatch, "scaling.rho0 has " + std::to_string(c.scaling.rho0.size()) +
                                                      " entries for " + std::to_string(spec.queues()) + " queues");
    return c;
}

RunConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": malformed JSON");
    }
    return config_from_json(doc);
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

json network_to_json(const NetworkSpec& spec) {
    json out;
    out["d"] = spec.states();
    out["L"] = spec.queues();
    out["generator"] = matrix_json(spec.gen.rates());
    out["lambda"] = matrix_json(spec.lambda);
    out["mu"] = tensor_json(spec.mu);
    out["lambda_hat"] = matrix_json(spec.lambda_hat);
    out["mu_hat"] = tensor_json(spec.mu_hat);
    out["sink"] = spec.sink;
    return out;
}

json config_to_json(const RunConfig& c) {
    json out;
    out["schema_version"] = c.schema_version;
    if (c.network) out["network"] = network_to_json(*c.network);
    if (c.model3) {
        json m;
        m["d"] = c.model3->states();
        m["generator"] = matrix_json(c.model3->gen.rates());
        m["lambda_star"] = vector_json(c.model3->lambda_star);
        m["kappa_star"] = vector_json(c.model3->kappa_star);
        m["mu_star"] = vector_json(c.model3->mu_star);
        out["model3"] = m;
    }
    json s;
    s["alpha"] = c.scaling.alpha;
    s["n"] = c.scaling.n;
    s["n_list"] = c.scaling.n_list;
    s["init_rule"] = c.scaling.init_rule == InitRule::Floor ? "floor" : "poisson";
    s["rho0"] = vector_json(c.scaling.rho0);
    out["scaling"] = s;
    json r;
    r["T"] = c.run.horizon;
    r["grid_step"] = c.run.grid_step;
    r["reps"] = c.run.reps;
    r["seed"] = c.run.seed;
    r["worker_count"] = c.run.worker_count;
    r["check_times"] = c.run.check_times;
    r["population_cap"] = c.run.population_cap;
    out["run"] = r;
    json t;
    t["fluid_cap"] = c.tolerance.fluid_cap;
    t["occupation_relative"] = c.tolerance.occupation_relative;
    t["occupation_stderr"] = c.tolerance.occupation_stderr;
    t["diffusion_relative"] = c.tolerance.diffusion_relative;
    t["diffusion_stderr"] = c.tolerance.diffusion_stderr;
    t["model3_stderr"] = c.tolerance.model3_stderr;
    t["bootstrap_resamples"] = c.tolerance.bootstrap_resamples;
    t["psd_tolerance"] = c.psd_tolerance;
    out["tolerance"] = t;
    json v;
    v["reference_scale"] = c.overrides.reference_scale;
    v["fluid_offset"] = c.overrides.fluid_offset;
    out["verify"] = v;
    json o;
    o["directory"] = c.output.directory;
    o["formats"] = c.output.formats;
    o["keep_raw"] = c.output.keep_raw;
    out["output"] = o;
    return out;
}

std::string serialize_config(const RunConfig& config) { return config_to_json(config).dump(2) + "\n"; }

}  // namespace mmq
