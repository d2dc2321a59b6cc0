#include "fairlend/serialize.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fairlend/errors.hpp"

namespace fairlend {

std::string format_fixed6(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    if (v == 0.0) return "0.000000";
    std::array<char, 64> buf{};
    const int n = std::snprintf(buf.data(), buf.size(), "%.6f", v);
    return std::string(buf.data(), static_cast<std::size_t>(n));
}

std::string format_roundtrip(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace {

double parse_double(std::string_view text, const std::string& what, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw DataError("line " + std::to_string(line) + ": bad " + what + " value \"" +
                        std::string(text) + "\"");
    }
    return v;
}

std::size_t parse_index(std::string_view text, const std::string& what, std::size_t line) {
    std::size_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw DataError("line " + std::to_string(line) + ": bad " + what + " value \"" +
                        std::string(text) + "\"");
    }
    return v;
}

int parse_binary(std::string_view text, const std::string& what, std::size_t line) {
    if (text == "0") return 0;
    if (text == "1") return 1;
    throw DataError("line " + std::to_string(line) + ": " + what + " must be 0 or 1, got \"" +
                    std::string(text) + "\"");
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

std::string read_line_stripped(std::istream& in, bool& ok) {
    std::string line;
    ok = static_cast<bool>(std::getline(in, line));
    if (ok && !line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

void require_header(std::istream& in, const char* expected, const char* what) {
    bool ok = false;
    const std::string line = read_line_stripped(in, ok);
    if (!ok || line != expected) {
        throw DataError(std::string(what) + ": expected header \"" + expected + "\"");
    }
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string() + " for reading");
    return in;
}

}  // namespace

// --- population ---------------------------------------------------------------

void write_population_csv(const Population& pop, std::ostream& out) {
    out << kPopulationCsvHeader << '\n';
    for (const auto& rec : pop.records) {
        out << rec.id << ',' << (rec.gender == Gender::Male ? 'M' : 'F') << ','
            << (rec.race == Race::GroupA ? 'A' : 'B') << ',' << format_fixed6(rec.age) << ','
            << format_fixed6(rec.income) << ',' << format_fixed6(rec.education_years) << ','
            << format_fixed6(rec.credit_score) << ',' << format_fixed6(rec.employment_years)
            << ',' << rec.zipcode << ',' << format_fixed6(rec.true_repay_prob) << ','
            << rec.true_repaid << ',' << rec.observed_repaid << '\n';
    }
}

void write_population_csv(const Population& pop, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_population_csv(pop, out);
}

Population read_population_csv(std::istream& in) {
    require_header(in, kPopulationCsvHeader, "population csv");
    Population pop;
    std::size_t line_no = 1;
    for (;;) {
        bool ok = false;
        const std::string line = read_line_stripped(in, ok);
        if (!ok) break;
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 12) {
            throw DataError("line " + std::to_string(line_no) + ": expected 12 fields, got " +
                            std::to_string(fields.size()));
        }
        ApplicantRecord rec;
        rec.id = parse_index(fields[0], "id", line_no);
        if (fields[1] == "M") {
            rec.gender = Gender::Male;
        } else if (fields[1] == "F") {
            rec.gender = Gender::Female;
        } else {
            throw DataError("line " + std::to_string(line_no) + ": gender must be M or F");
        }
        if (fields[2] == "A") {
            rec.race = Race::GroupA;
        } else if (fields[2] == "B") {
            rec.race = Race::GroupB;
        } else {
            throw DataError("line " + std::to_string(line_no) + ": race must be A or B");
        }
        rec.age = parse_double(fields[3], "age", line_no);
        rec.income = parse_double(fields[4], "income", line_no);
        rec.education_years = parse_double(fields[5], "education_years", line_no);
        rec.credit_score = parse_double(fields[6], "credit_score", line_no);
        rec.employment_years = parse_double(fields[7], "employment_years", line_no);
        rec.zipcode = parse_index(fields[8], "zipcode", line_no);
        rec.true_repay_prob = parse_double(fields[9], "true_repay_prob", line_no);
        rec.true_repaid = parse_binary(fields[10], "true_repaid", line_no);
        rec.observed_repaid = parse_binary(fields[11], "observed_repaid", line_no);
        pop.records.push_back(rec);
    }
    return pop;
}

Population read_population_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_population_csv(in);
}

// --- model ----------------------------------------------------------------------

namespace {

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> keys,
                  const char* what) {
    if (!j.is_object()) throw DataError(std::string(what) + ": expected a JSON object");
    for (const char* key : keys) {
        if (!j.contains(key)) {
            throw DataError(std::string(what) + ": missing key \"" + key + "\"");
        }
    }
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : keys) known = known || item.key() == key;
        if (!known) {
            throw DataError(std::string(what) + ": unknown key \"" + item.key() + "\"");
        }
    }
}

std::vector<double> double_array(const nlohmann::json& j, const char* key, const char* what) {
    if (!j.at(key).is_array()) {
        throw DataError(std::string(what) + ": \"" + key + "\" must be an array");
    }
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) {
            throw DataError(std::string(what) + ": \"" + key + "\" must hold numbers");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

nlohmann::json model_to_json(const TrainedModel& model) {
    nlohmann::json j;
    j["schema"] = model.schema.feature_names;
    j["means"] = model.standardizer.means;
    j["stds"] = model.standardizer.stds;
    j["weights"] = model.weights;
    j["intercept"] = model.intercept;
    j["label_source"] = label_source_name(model.label_source);
    j["hyperparams"] = {{"learning_rate", model.hyperparams.learning_rate},
                        {"max_iterations", model.hyperparams.max_iterations},
                        {"l2_penalty", model.hyperparams.l2_penalty},
                        {"convergence_tolerance", model.hyperparams.convergence_tolerance}};
    return j;
}

TrainedModel model_from_json(const nlohmann::json& j) {
    require_keys(j, {"schema", "means", "stds", "weights", "intercept", "label_source",
                     "hyperparams"},
                 "model json");
    TrainedModel model;
    if (!j.at("schema").is_array()) throw DataError("model json: \"schema\" must be an array");
    for (const auto& name : j.at("schema")) {
        if (!name.is_string()) throw DataError("model json: schema entries must be strings");
        model.schema.feature_names.push_back(name.get<std::string>());
    }
    model.schema.validate();
    model.standardizer.means = double_array(j, "means", "model json");
    model.standardizer.stds = double_array(j, "stds", "model json");
    model.weights = double_array(j, "weights", "model json");
    if (!j.at("intercept").is_number()) {
        throw DataError("model json: \"intercept\" must be a number");
    }
    model.intercept = j.at("intercept").get<double>();
    if (!j.at("label_source").is_string()) {
        throw DataError("model json: \"label_source\" must be a string");
    }
    model.label_source = label_source_from_name(j.at("label_source").get<std::string>());
    const auto& hp = j.at("hyperparams");
    require_keys(hp, {"learning_rate", "max_iterations", "l2_penalty", "convergence_tolerance"},
                 "model json hyperparams");
    model.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
    model.hyperparams.max_iterations = hp.at("max_iterations").get<std::size_t>();
    model.hyperparams.l2_penalty = hp.at("l2_penalty").get<double>();
    model.hyperparams.convergence_tolerance = hp.at("convergence_tolerance").get<double>();
    model.hyperparams.validate();

    const std::size_t k = model.schema.size();
    if (model.standardizer.means.size() != k || model.standardizer.stds.size() != k ||
        model.weights.size() != k) {
        throw DataError("model json: means/stds/weights must match the schema length");
    }
    return model;
}

// --- policy ---------------------------------------------------------------------

namespace {

std::array<const char*, 2> group_key_names(const std::string& attribute) {
    if (attribute == "gender") return {"Male", "Female"};
    return {"GroupA", "GroupB"};
}

}  // namespace

nlohmann::json policy_to_json(const DecisionPolicy& policy) {
    policy.validate();
    nlohmann::json j;
    j["kind"] = policy_kind_name(policy.kind);
    j["attribute"] = policy.attribute;
    if (policy.kind == PolicyKind::Uniform) {
        j["thresholds"] = policy.uniform_threshold;
    } else {
        const auto keys = group_key_names(policy.attribute);
        j["thresholds"] = {{keys[0], policy.group_thresholds[0]},
                           {keys[1], policy.group_thresholds[1]}};
    }
    j["provenance"] = policy.provenance;
    return j;
}

DecisionPolicy policy_from_json(const nlohmann::json& j) {
    require_keys(j, {"kind", "attribute", "thresholds", "provenance"}, "policy json");
    DecisionPolicy policy;
    policy.kind = policy_kind_from_name(j.at("kind").get<std::string>());
    policy.attribute = j.at("attribute").get<std::string>();
    policy.provenance = j.at("provenance").get<std::string>();
    const auto& t = j.at("thresholds");
    if (policy.kind == PolicyKind::Uniform) {
        if (!t.is_number()) {
            throw DataError("policy json: uniform policy needs a numeric \"thresholds\"");
        }
        policy.uniform_threshold = t.get<double>();
    } else {
        const auto keys = group_key_names(policy.attribute);
        require_keys(t, {keys[0], keys[1]}, "policy json thresholds");
        policy.group_thresholds[0] = t.at(keys[0]).get<double>();
        policy.group_thresholds[1] = t.at(keys[1]).get<double>();
    }
    policy.validate();
    return policy;
}

// --- metrics --------------------------------------------------------------------

std::string metrics_csv_row(const MetricsReport& report) {
    std::ostringstream out;
    out << report.model << ',' << report.policy << ',' << label_source_name(report.labels)
        << ',' << format_fixed6(report.econ.interest_rate) << ','
        << format_fixed6(report.econ.default_loss_rate) << ','
        << format_fixed6(report.econ.loan_amount) << ','
        << format_fixed6(report.profit.net_profit) << ',' << format_fixed6(report.profit.roi)
        << ',' << format_fixed6(report.profit.approval_rate) << ','
        << format_fixed6(report.profit.default_rate) << ','
        << format_fixed6(report.gender.dp_diff) << ',' << format_fixed6(report.race.dp_diff)
        << ',' << format_fixed6(report.gender.eo_diff) << ','
        << format_fixed6(report.race.eo_diff) << ',' << format_fixed6(report.gender.di_ratio)
        << ',' << format_fixed6(report.race.di_ratio) << ','
        << (report.gender.four_fifths_pass ? '1' : '0') << ','
        << (report.race.four_fifths_pass ? '1' : '0') << ','
        << format_fixed6(report.consistency);
    return out.str();
}

void write_metrics_csv(std::span<const MetricsReport> reports, std::ostream& out) {
    out << kMetricsCsvHeader << '\n';
    for (const auto& report : reports) out << metrics_csv_row(report) << '\n';
}

namespace {

nlohmann::json di_value(double di) {
    if (std::isinf(di)) return "inf";
    return di;
}

}  // namespace

nlohmann::json metrics_to_json(const MetricsReport& report) {
    return {{"model", report.model},
            {"policy", report.policy},
            {"labels", label_source_name(report.labels)},
            {"r", report.econ.interest_rate},
            {"d", report.econ.default_loss_rate},
            {"L", report.econ.loan_amount},
            {"net_profit", report.profit.net_profit},
            {"roi", report.profit.roi},
            {"approval_rate", report.profit.approval_rate},
            {"default_rate", report.profit.default_rate},
            {"dp_gender", report.gender.dp_diff},
            {"dp_race", report.race.dp_diff},
            {"eo_gender", report.gender.eo_diff},
            {"eo_race", report.race.eo_diff},
            {"di_gender", di_value(report.gender.di_ratio)},
            {"di_race", di_value(report.race.di_ratio)},
            {"ff_gender", report.gender.four_fifths_pass},
            {"ff_race", report.race.four_fifths_pass},
            {"consistency", report.consistency}};
}

// --- experiment tables ------------------------------------------------------------

void write_threshold_curve_csv(const ThresholdCurve& curve, std::ostream& out) {
    out << kThresholdCurveCsvHeader << '\n';
    for (const auto& p : curve.points) {
        out << format_fixed6(p.threshold) << ',' << format_fixed6(p.net_profit) << ','
            << format_fixed6(p.roi) << ',' << format_fixed6(p.approval_rate) << ','
            << format_fixed6(p.default_rate) << ',' << format_fixed6(p.dp_gender) << ','
            << format_fixed6(p.dp_race) << '\n';
    }
}

void write_efficiency_csv(std::span<const EfficiencyRow> rows, std::ostream& out) {
    out << kEfficiencyCsvHeader << '\n';
    for (const auto& row : rows) {
        out << format_fixed6(row.profit_weight) << ',' << row.model << ','
            << format_fixed6(row.score) << ',' << (row.is_best ? '1' : '0') << '\n';
    }
}

void write_feature_impact_csv(const FeatureImpactReport& report, std::ostream& out) {
    out << kFeatureImpactCsvHeader << '\n';
    for (const auto& impact : report.impacts) {
        out << impact.feature << ',' << format_fixed6(impact.delta_dp_gender) << ','
            << format_fixed6(impact.delta_dp_race) << '\n';
    }
}

// --- simulation traces --------------------------------------------------------------

void write_trace_csv(std::span<const TraceRow> rows, std::ostream& out) {
    out << kTraceCsvHeader << '\n';
    for (const auto& row : rows) {
        out << row.cycle << ',' << row.attribute << ',' << row.group << ',' << row.metric
            << ',' << format_roundtrip(row.value) << '\n';
    }
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
    require_header(in, kTraceCsvHeader, "trace csv");
    std::vector<TraceRow> rows;
    std::size_t line_no = 1;
    for (;;) {
        bool ok = false;
        const std::string line = read_line_stripped(in, ok);
        if (!ok) break;
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5) {
            throw DataError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                            std::to_string(fields.size()));
        }
        TraceRow row;
        row.cycle = parse_index(fields[0], "cycle", line_no);
        row.attribute = std::string(fields[1]);
        row.group = std::string(fields[2]);
        row.metric = std::string(fields[3]);
        row.value = parse_double(fields[4], "value", line_no);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace fairlend
