#include "diolab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace diolab {

using nlohmann::json;

namespace {

std::string fmt17(double x) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError("config: " + path + ": " + message);
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

std::int64_t get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<std::int64_t>();
}

std::vector<double> get_number_list(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected a list of numbers");
    std::vector<double> out;
    for (size_t i = 0; i < j.size(); ++i)
        out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& prefix) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) fail(prefix + key, "unknown key");
    }
}

json default_document() {
    return json{
        {"boundary", "strict"},
        {"master_seed", 0},
        {"trunc", {{"L", 64.0}, {"c", 2.0}}},
        {"test_function", {{"kind", "f_eps"}, {"eps", 0.05}}},
        {"threads", "auto"},
        {"output_path", "results"},
        {"kappa_hat", 2.0},
        {"budget", 100'000'000},
        {"t_pairs", json::array()},
    };
}

std::string normalize_kind(std::string kind) {
    for (auto& c : kind)
        if (c == '-') c = '_';
    return kind;
}

double json_to_double(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json double_to_json(double x) {
    if (std::isnan(x)) return nullptr;
    return x;
}

json cumulant_to_json(const CumulantEstimate& c) {
    return json{{"order", c.order},
                {"value", c.value},
                {"stderr_boot", c.stderr_boot},
                {"sample_count", c.sample_count}};
}

CumulantEstimate cumulant_from_json(const json& j) {
    CumulantEstimate c;
    c.order = j.at("order").get<int>();
    c.value = j.at("value").get<double>();
    c.stderr_boot = j.at("stderr_boot").get<double>();
    c.sample_count = j.at("sample_count").get<std::int64_t>();
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["kind"] = experiment_kind_name(c.kind);
    j["m"] = c.instance.m;
    j["n"] = c.instance.n;
    j["vartheta"] = c.instance.vartheta;
    j["weights"] = c.instance.weights.w;
    j["xi"] = c.instance.xi;
    j["boundary"] = c.instance.boundary == Boundary::Strict ? "strict" : "closed";
    j["scales"] = c.scales;
    j["samples"] = c.samples;
    j["master_seed"] = c.master_seed;
    j["trunc"] = {{"L", c.trunc.L}, {"c", c.trunc.c}};
    j["f_eps"] = c.f_eps;
    if (c.base_point) {
        json g = json::array();
        for (int r = 0; r < c.base_point->g.rows(); ++r) {
            json row = json::array();
            for (int col = 0; col < c.base_point->g.cols(); ++col)
                row.push_back(c.base_point->g(r, col));
            g.push_back(row);
        }
        json v = json::array();
        for (int i = 0; i < c.base_point->v.size(); ++i) v.push_back(c.base_point->v(i));
        j["base_point"] = {{"g", g}, {"v", v}};
    } else {
        j["base_point"] = nullptr;
    }
    json pairs = json::array();
    for (const auto& [a, b] : c.t_pairs) pairs.push_back(json::array({a, b}));
    j["t_pairs"] = pairs;
    j["threads"] = c.threads;
    j["kappa_hat"] = c.kappa_hat;
    j["liouville_E"] = c.liouville_E;
    j["liouville_Qmax"] = c.liouville_Qmax;
    j["budget"] = c.budget;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.kind = experiment_kind_from_name(j.at("kind").get<std::string>());
    const int m = j.at("m").get<int>();
    const int n = j.at("n").get<int>();
    std::vector<double> w = j.at("weights").get<std::vector<double>>();
    Weights weights(m, n, w, true);
    c.instance = DioInstance(m, n, j.at("vartheta").get<std::vector<double>>(), weights,
                             j.at("xi").get<std::vector<double>>(),
                             j.at("boundary").get<std::string>() == "closed"
                                 ? Boundary::Closed
                                 : Boundary::Strict);
    c.scales = j.at("scales").get<std::vector<double>>();
    c.samples = j.at("samples").get<std::int64_t>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.trunc = TruncationSpec(j.at("trunc").at("L").get<double>(),
                             j.at("trunc").at("c").get<double>());
    c.f_eps = j.at("f_eps").get<double>();
    if (!j.at("base_point").is_null()) {
        const json& bp = j.at("base_point");
        const auto& g = bp.at("g");
        Matrix gm(g.size(), g.size());
        for (size_t r = 0; r < g.size(); ++r)
            for (size_t col = 0; col < g[r].size(); ++col)
                gm(static_cast<int>(r), static_cast<int>(col)) = g[r][col].get<double>();
        const auto& v = bp.at("v");
        Vector vv(v.size());
        for (size_t i = 0; i < v.size(); ++i) vv(static_cast<int>(i)) = v[i].get<double>();
        c.base_point = BasePoint{gm, vv};
    }
    for (const auto& p : j.at("t_pairs"))
        c.t_pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
    c.threads = j.at("threads").get<int>();
    c.kappa_hat = j.at("kappa_hat").get<double>();
    c.liouville_E = j.at("liouville_E").get<double>();
    c.liouville_Qmax = j.at("liouville_Qmax").get<std::int64_t>();
    c.budget = j.at("budget").get<std::int64_t>();
    return c;
}

}  // namespace

void apply_override(json& doc, const std::string& key_eq_value) {
    const auto eq = key_eq_value.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key=value, got: " + key_eq_value);
    const std::string key = key_eq_value.substr(0, eq);
    const std::string raw = key_eq_value.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;  // bare string
    }
    json* node = &doc;
    size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot - start);
        if (part.empty()) throw ConfigError("--set: empty key segment in " + key);
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

namespace {
ParsedConfig parse_config_impl(const std::string& text);
}

ParsedConfig parse_config_text(const std::string& text) {
    try {
        return parse_config_impl(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: malformed value: ") + e.what());
    }
}

namespace {
ParsedConfig parse_config_impl(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");

    static const std::set<std::string> kTopKeys = {
        "kind",   "m",           "n",          "vartheta",   "weights",
        "xi",     "boundary",    "N_list",     "t_list",     "samples",
        "master_seed", "trunc",  "test_function", "base_point", "output_path",
        "threads", "t_pairs",    "kappa_hat",  "budget"};
    reject_unknown_keys(doc, kTopKeys, "");

    json merged = default_document();
    merged.update(doc);
    // update() is shallow; fill missing subkeys of object-valued defaults.
    for (const char* key : {"trunc", "test_function"}) {
        if (doc.contains(key) && doc[key].is_object()) {
            json sub = default_document()[key];
            sub.update(doc[key]);
            merged[key] = sub;
        }
    }

    for (const std::string& req : {"kind", "m", "n", "samples"})
        if (!merged.contains(req)) fail(req, "required key missing");

    ExperimentConfig cfg;
    const std::string kind = normalize_kind(merged["kind"].get<std::string>());
    cfg.kind = experiment_kind_from_name(kind);
    merged["kind"] = kind;

    const int m = static_cast<int>(get_int(merged["m"], "m"));
    const int n = static_cast<int>(get_int(merged["n"], "n"));
    if (m < 1) fail("m", "must be >= 1");
    if (n < 1) fail("n", "must be >= 1");

    std::vector<double> vartheta(m, 1.0);
    if (merged.contains("vartheta")) vartheta = get_number_list(merged["vartheta"], "vartheta");
    if (static_cast<int>(vartheta.size()) != m) fail("vartheta", "must have m entries");
    for (size_t i = 0; i < vartheta.size(); ++i)
        if (!(vartheta[i] > 0.0))
            fail("vartheta[" + std::to_string(i) + "]",
                 "must be positive, got " + fmt17(vartheta[i]));
    merged["vartheta"] = vartheta;

    std::vector<double> w;
    if (merged.contains("weights")) {
        w = get_number_list(merged["weights"], "weights");
    } else {
        w.assign(m, static_cast<double>(n) / m);
    }
    if (static_cast<int>(w.size()) == m) {
        w.resize(m + n, 1.0);  // expansion given; contraction weights are 1
    } else if (static_cast<int>(w.size()) != m + n) {
        fail("weights", "must list m expansion weights or all m+n weights");
    }
    double exp_sum = 0.0;
    for (int i = 0; i < m; ++i) exp_sum += w[i];
    double contr_sum = 0.0;
    for (int i = m; i < m + n; ++i) contr_sum += w[i];
    if (std::abs(exp_sum - contr_sum) > 1e-9)
        fail("weights", "expansion sum " + fmt17(exp_sum) + " != contraction sum " +
                            fmt17(contr_sum));
    merged["weights"] = w;

    std::vector<double> xi(m, 0.0);
    if (merged.contains("xi")) xi = get_number_list(merged["xi"], "xi");
    if (static_cast<int>(xi.size()) != m) fail("xi", "must have m entries");
    merged["xi"] = xi;

    const std::string boundary = merged["boundary"].get<std::string>();
    if (boundary != "strict" && boundary != "closed")
        fail("boundary", "must be \"strict\" or \"closed\", got \"" + boundary + "\"");

    Weights weights(m, n, w, true);
    cfg.instance = DioInstance(m, n, vartheta, weights, xi,
                               boundary == "closed" ? Boundary::Closed : Boundary::Strict);

    const bool counting_kind =
        cfg.kind == ExperimentKind::Clt || cfg.kind == ExperimentKind::MeanGrowth ||
        cfg.kind == ExperimentKind::Variance || cfg.kind == ExperimentKind::CumulantDecay;
    if (merged.contains("N_list") && merged.contains("t_list"))
        fail("t_list", "give N_list or t_list, not both");
    const char* scale_key = counting_kind ? "N_list" : "t_list";
    if (!merged.contains(scale_key)) fail(scale_key, "required for this kind");
    cfg.scales = get_number_list(merged[scale_key], scale_key);
    if (cfg.scales.empty()) fail(scale_key, "must be nonempty");
    for (size_t i = 1; i < cfg.scales.size(); ++i)
        if (cfg.scales[i] <= cfg.scales[i - 1])
            fail(scale_key, "must be strictly increasing");

    cfg.samples = get_int(merged["samples"], "samples");
    if (cfg.samples < 1) fail("samples", "must be >= 1, got " + std::to_string(cfg.samples));

    if (merged["master_seed"].is_number_integer() || merged["master_seed"].is_number_unsigned())
        cfg.master_seed = merged["master_seed"].get<std::uint64_t>();
    else
        fail("master_seed", "expected an integer");

    const json& tr = merged["trunc"];
    if (!tr.is_object()) fail("trunc", "expected object with L and c");
    reject_unknown_keys(tr, {"L", "c"}, "trunc.");
    const double L = get_number(tr.at("L"), "trunc.L");
    const double cc = get_number(tr.at("c"), "trunc.c");
    if (L < 1.0) fail("trunc.L", "must be >= 1, got " + fmt17(L));
    if (cc <= 1.0) fail("trunc.c", "must be > 1, got " + fmt17(cc));
    cfg.trunc = TruncationSpec(L, cc);

    const json& tf = merged["test_function"];
    if (!tf.is_object()) fail("test_function", "expected object with kind and eps");
    reject_unknown_keys(tf, {"kind", "eps"}, "test_function.");
    const std::string tf_kind = tf.at("kind").get<std::string>();
    if (tf_kind != "chi" && tf_kind != "f_eps")
        fail("test_function.kind", "must be \"chi\" or \"f_eps\"");
    cfg.f_eps = get_number(tf.value("eps", json(0.05)), "test_function.eps");
    if (tf_kind == "f_eps" && !(cfg.f_eps > 0.0))
        fail("test_function.eps", "must be positive, got " + fmt17(cfg.f_eps));

    if (merged.contains("base_point") && !merged["base_point"].is_null()) {
        const json& bp = merged["base_point"];
        reject_unknown_keys(bp, {"g", "v"}, "base_point.");
        const int d = m + n;
        const json& g = bp.at("g");
        if (!g.is_array() || static_cast<int>(g.size()) != d)
            fail("base_point.g", "expected a d x d matrix");
        Matrix gm(d, d);
        for (int r = 0; r < d; ++r) {
            auto row = get_number_list(g[r], "base_point.g[" + std::to_string(r) + "]");
            if (static_cast<int>(row.size()) != d)
                fail("base_point.g[" + std::to_string(r) + "]", "expected d entries");
            for (int col = 0; col < d; ++col) gm(r, col) = row[col];
        }
        auto v = get_number_list(bp.at("v"), "base_point.v");
        if (static_cast<int>(v.size()) != d) fail("base_point.v", "expected d entries");
        Vector vv(d);
        for (int i = 0; i < d; ++i) vv(i) = v[i];
        cfg.base_point = BasePoint{gm, vv};
    }

    if (merged.contains("t_pairs")) {
        const json& pairs = merged["t_pairs"];
        if (!pairs.is_array()) fail("t_pairs", "expected a list of [t1, t2] pairs");
        for (size_t i = 0; i < pairs.size(); ++i) {
            auto p = get_number_list(pairs[i], "t_pairs[" + std::to_string(i) + "]");
            if (p.size() != 2) fail("t_pairs[" + std::to_string(i) + "]", "expected two times");
            cfg.t_pairs.emplace_back(p[0], p[1]);
        }
    }

    if (merged["threads"].is_string()) {
        if (merged["threads"].get<std::string>() != "auto")
            fail("threads", "must be a positive integer or \"auto\"");
        cfg.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    } else {
        cfg.threads = static_cast<int>(get_int(merged["threads"], "threads"));
        if (cfg.threads < 1) fail("threads", "must be >= 1");
    }

    cfg.kappa_hat = get_number(merged["kappa_hat"], "kappa_hat");
    if (!(cfg.kappa_hat > 0.0)) fail("kappa_hat", "must be positive");
    cfg.budget = get_int(merged["budget"], "budget");
    if (cfg.budget < 1) fail("budget", "must be >= 1");

    cfg.validate();

    ParsedConfig out;
    out.experiment = cfg;
    out.output_path = merged["output_path"].get<std::string>();
    merged["samples"] = cfg.samples;
    merged[scale_key] = cfg.scales;
    out.echo = merged;
    return out;
}
}  // namespace

ParsedConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

json record_to_json(const RunRecord& record) {
    json j;
    j["config"] = config_to_json(record.config);
    json scales = json::array();
    for (const auto& st : record.per_scale) {
        scales.push_back(json{{"scale", st.scale},
                              {"samples", st.samples},
                              {"mean", st.mean},
                              {"stderr_mean", st.stderr_mean},
                              {"k2", cumulant_to_json(st.k2)},
                              {"k3", cumulant_to_json(st.k3)},
                              {"k4", cumulant_to_json(st.k4)},
                              {"ks", double_to_json(st.ks)},
                              {"equid_error", double_to_json(st.equid_error)},
                              {"exceed_fraction", double_to_json(st.exceed_fraction)}});
    }
    j["per_scale"] = scales;
    json pairs = json::array();
    for (const auto& p : record.pairs)
        pairs.push_back(json{{"t1", p.t1},
                             {"t2", p.t2},
                             {"D", p.D},
                             {"error", p.error},
                             {"samples", p.samples}});
    j["pairs"] = pairs;
    json verdicts = json::array();
    for (const auto& v : record.verdicts)
        verdicts.push_back(json{{"name", v.name},
                                {"pass", v.pass},
                                {"slope", v.slope},
                                {"intercept", v.intercept},
                                {"residual", v.residual},
                                {"note", v.note}});
    j["verdicts"] = verdicts;
    j["annotation"] = record.annotation;
    j["wall_seconds"] = record.wall_seconds;
    j["version"] = record.version;
    return j;
}

RunRecord record_from_json(const json& j) {
    RunRecord rec;
    rec.config = config_from_json(j.at("config"));
    for (const auto& s : j.at("per_scale")) {
        ScaleStats st;
        st.scale = s.at("scale").get<double>();
        st.samples = s.at("samples").get<std::int64_t>();
        st.mean = s.at("mean").get<double>();
        st.stderr_mean = s.at("stderr_mean").get<double>();
        st.k2 = cumulant_from_json(s.at("k2"));
        st.k3 = cumulant_from_json(s.at("k3"));
        st.k4 = cumulant_from_json(s.at("k4"));
        st.ks = json_to_double(s.at("ks"));
        st.equid_error = json_to_double(s.at("equid_error"));
        st.exceed_fraction = json_to_double(s.at("exceed_fraction"));
        rec.per_scale.push_back(st);
    }
    for (const auto& p : j.at("pairs")) {
        PairStats ps;
        ps.t1 = p.at("t1").get<double>();
        ps.t2 = p.at("t2").get<double>();
        ps.D = p.at("D").get<double>();
        ps.error = p.at("error").get<double>();
        ps.samples = p.at("samples").get<std::int64_t>();
        rec.pairs.push_back(ps);
    }
    for (const auto& v : j.at("verdicts")) {
        TrendVerdict tv;
        tv.name = v.at("name").get<std::string>();
        tv.pass = v.at("pass").get<bool>();
        tv.slope = v.at("slope").get<double>();
        tv.intercept = v.at("intercept").get<double>();
        tv.residual = v.at("residual").get<double>();
        tv.note = v.at("note").get<std::string>();
        rec.verdicts.push_back(tv);
    }
    rec.annotation = j.at("annotation").get<std::string>();
    rec.wall_seconds = j.at("wall_seconds").get<double>();
    rec.version = j.at("version").get<std::string>();
    return rec;
}

std::string results_csv(const RunRecord& record) {
    std::string out = "scale,statistic,value,stderr,samples\r\n";
    auto row = [&](double scale, const char* stat, double value, double err,
                   std::int64_t samples) {
        out += fmt17(scale);
        out += ',';
        out += stat;
        out += ',';
        out += fmt17(value);
        out += ',';
        if (!std::isnan(err)) out += fmt17(err);
        out += ',';
        out += std::to_string(samples);
        out += "\r\n";
    };
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& st : record.per_scale) {
        row(st.scale, "mean", st.mean, st.stderr_mean, st.samples);
        if (st.k2.order != 0) row(st.scale, "k2", st.k2.value, st.k2.stderr_boot, st.samples);
        if (st.k3.order != 0) row(st.scale, "k3", st.k3.value, st.k3.stderr_boot, st.samples);
        if (st.k4.order != 0) row(st.scale, "k4", st.k4.value, st.k4.stderr_boot, st.samples);
        if (!std::isnan(st.ks)) row(st.scale, "ks", st.ks, nan, st.samples);
        if (!std::isnan(st.equid_error))
            row(st.scale, "equid_error", st.equid_error, st.stderr_mean, st.samples);
        if (!std::isnan(st.exceed_fraction))
            row(st.scale, "exceed_fraction", st.exceed_fraction, st.stderr_mean, st.samples);
    }
    for (const auto& p : record.pairs)
        row(p.D, "pair_error", p.error, nan, p.samples);
    return out;
}

void write_results(const RunRecord& record, const std::string& path_stem) {
    {
        std::ofstream out(path_stem + ".json", std::ios::binary);
        if (!out) throw IoError("cannot write " + path_stem + ".json");
        out << record_to_json(record).dump(2) << "\n";
        if (!out) throw IoError("write failed: " + path_stem + ".json");
    }
    {
        std::ofstream out(path_stem + ".csv", std::ios::binary);
        if (!out) throw IoError("cannot write " + path_stem + ".csv");
        out << results_csv(record);
        if (!out) throw IoError("write failed: " + path_stem + ".csv");
    }
}

}  // namespace diolab
