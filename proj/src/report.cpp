#include "addrparse/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "addrparse/error.hpp"

namespace addrparse {

namespace {

ordered_json record_to_json(const CountryRecord& r) {
    ordered_json j;
    j["country"] = r.country;
    if (!r.relation.empty()) j["relation"] = r.relation;
    j["n"] = r.n;
    j["k"] = r.k;
    j["token_accuracy"] = r.token_accuracy;
    j["mean_sequence_accuracy"] = r.mean_sequence_accuracy;
    j["per_seed"] = r.per_seed;
    j["mean"] = r.mean;
    j["std"] = r.std;
    return j;
}

CountryRecord record_from_json(const ordered_json& j) {
    CountryRecord r;
    r.country = j.at("country").get<std::string>();
    r.relation = j.value("relation", std::string{});
    r.n = j.at("n").get<std::size_t>();
    r.k = j.at("k").get<std::size_t>();
    r.token_accuracy = j.at("token_accuracy").get<double>();
    r.mean_sequence_accuracy = j.at("mean_sequence_accuracy").get<double>();
    r.per_seed = j.at("per_seed").get<std::vector<double>>();
    r.mean = j.at("mean").get<double>();
    r.std = j.at("std").get<double>();
    if (r.k > r.n) throw SchemaError("report: k exceeds n for " + r.country);
    return r;
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string pct(double v) { return fmt("%.2f", 100.0 * v); }

}  // namespace

ordered_json report_to_json(const EvalReport& report) {
    ordered_json j;
    j["format"] = "addrparse-eval 1";
    j["variant"] = report.variant;
    j["seeds"] = report.seeds;
    j["countries"] = ordered_json::array();
    for (const auto& c : report.countries) j["countries"].push_back(record_to_json(c));
    j["overall"] = record_to_json(report.overall);
    return j;
}

EvalReport report_from_json(const ordered_json& j) {
    try {
        if (j.at("format").get<std::string>() != "addrparse-eval 1") {
            throw SchemaError("report: unsupported format " + j.at("format").dump());
        }
        EvalReport r;
        r.variant = j.at("variant").get<std::string>();
        r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        for (const auto& c : j.at("countries")) r.countries.push_back(record_from_json(c));
        r.overall = record_from_json(j.at("overall"));
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("report: ") + e.what());
    }
}

std::string render_report_text(const EvalReport& report) {
    std::ostringstream out;
    out << "variant: " << report.variant << "\nseeds:";
    for (auto s : report.seeds) out << ' ' << s;
    out << "\n\ncountry  relation                 tokens   accuracy  mean (std)       per-seed\n";
    auto row = [&](const CountryRecord& r) {
        char head[96];
        std::snprintf(head, sizeof head, "%-8s %-24s %7zu  %8s  %s (%s)", r.country.c_str(),
                      r.relation.empty() ? "-" : r.relation.c_str(), r.n, pct(r.token_accuracy).c_str(),
                      pct(r.mean).c_str(), pct(r.std).c_str());
        out << head << "  ";
        for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
            out << (i ? " " : "") << pct(r.per_seed[i]);
        }
        out << '\n';
    };
    for (const auto& c : report.countries) row(c);
    row(report.overall);
    return out.str();
}

ZStatReport compare_reports(const EvalReport& a, const EvalReport& b) {
    ZStatReport z;
    z.variant_a = a.variant;
    z.variant_b = b.variant;
    std::map<std::string, const CountryRecord*> other;
    for (const auto& c : b.countries) other[c.country] = &c;
    auto add = [&](const CountryRecord& x, const CountryRecord& y) {
        if (x.n == 0 || y.n == 0) return;
        z.rows.push_back({x.country, x.token_accuracy, y.token_accuracy, z_test(x.k, x.n, y.k, y.n)});
    };
    for (const auto& c : a.countries) {
        if (auto it = other.find(c.country); it != other.end()) add(c, *it->second);
    }
    add(a.overall, b.overall);
    return z;
}

ordered_json zstat_to_json(const ZStatReport& z) {
    ordered_json j;
    j["format"] = "addrparse-zstat 1";
    j["a"] = z.variant_a;
    j["b"] = z.variant_b;
    j["critical"] = kZCritical;
    j["rows"] = ordered_json::array();
    for (const auto& r : z.rows) {
        ordered_json row;
        row["country"] = r.country;
        row["accuracy_a"] = r.accuracy_a;
        row["accuracy_b"] = r.accuracy_b;
        row["k1"] = r.test.k1;
        row["n1"] = r.test.n1;
        row["k2"] = r.test.k2;
        row["n2"] = r.test.n2;
        row["pooled"] = r.test.pooled;
        row["z"] = r.test.z;
        row["reject"] = r.test.reject;
        j["rows"].push_back(row);
    }
    return j;
}

std::string render_zstat_text(const ZStatReport& z) {
    std::ostringstream out;
    out << "a: " << z.variant_a << "\nb: " << z.variant_b << "\n\ncountry  acc(a)  acc(b)  z          reject\n";
    for (const auto& r : z.rows) {
        char line[128];
        std::snprintf(line, sizeof line, "%-8s %6s  %6s  %+9.4f  %s\n", r.country.c_str(),
                      pct(r.accuracy_a).c_str(), pct(r.accuracy_b).c_str(), r.test.z,
                      r.test.reject ? "yes" : "no");
        out << line;
    }
    return out.str();
}

ordered_json history_to_json(std::uint64_t seed, const TrainHistory& history) {
    ordered_json j;
    j["format"] = "addrparse-history 1";
    j["seed"] = seed;
    j["stop_reason"] = std::string(stop_reason_name(history.stop_reason));
    j["best_epoch"] = history.best_epoch;
    j["best_val_loss"] = history.best_val_loss;
    j["epochs"] = ordered_json::array();
    for (const auto& e : history.epochs) {
        j["epochs"].push_back(
            {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"lr", e.lr}});
    }
    return j;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed: " + path.string());
}

void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

ordered_json read_json_file(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    try {
        return ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

}  // namespace addrparse
