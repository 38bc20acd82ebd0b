// SPDX-License-Identifier: Apache-2.0

#include "mmw/results_io.hpp"

#include <json.hpp>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>

namespace mmw {

namespace {

using nlohmann::json;

std::string csv_field(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
        return f;
    }
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

json number_array(const std::vector<double>& v) {
    json a = json::array();
    for (double d : v) {
        a.push_back(std::isfinite(d) ? json(d) : json(nullptr));
    }
    return a;
}

std::vector<double> read_numbers(const json& a) {
    std::vector<double> out;
    for (const json& v : a) {
        out.push_back(v.is_null() ? std::nan("") : v.get<double>());
    }
    return out;
}

json metadata_object(const RunMetadata& m) {
    return json{{"config_hash", m.config_hash},
                {"seed", m.seed},
                {"code_version", m.code_version},
                {"trials", m.trials},
                {"draw_ledger", m.draw_ledger}};
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open '" + path + "' for writing: " + std::strerror(errno));
    }
    out << body;
    out.flush();
    if (!out) {
        throw Error("write to '" + path + "' failed: " + std::strerror(errno));
    }
}

} // namespace

OutputFormat parse_format(const std::string& name) {
    if (name == "csv") {
        return OutputFormat::Csv;
    }
    if (name == "json") {
        return OutputFormat::Json;
    }
    throw InvalidInput("unknown output format '" + name + "' (expected csv or json)");
}

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string to_csv(const RunResult& r) {
    std::string out = csv_field("x");
    for (const Series& s : r.series) {
        out += ',' + csv_field(s.name + "_mean") + ',' + csv_field(s.name + "_stderr");
    }
    out += '\n';
    if (r.series.empty()) {
        return out;
    }
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        out += format_number(r.x[i]);
        for (const Series& s : r.series) {
            out += ',' + format_number(s.mean.at(i)) + ',' + format_number(s.std_error.at(i));
        }
        out += '\n';
    }
    return out;
}

std::string to_json(const RunResult& r) {
    json series = json::array();
    for (const Series& s : r.series) {
        series.push_back(json{{"name", s.name},
                              {"mean", number_array(s.mean)},
                              {"stderr", number_array(s.std_error)}});
    }
    const json doc{{"schema_version", kResultSchemaVersion},
                   {"kind", curve_name(r.kind)},
                   {"x", json{{"name", r.x_name}, {"unit", r.x_unit}, {"values", number_array(r.x)}}},
                   {"series", series},
                   {"metadata", metadata_object(r.metadata)}};
    return doc.dump(2) + '\n';
}

RunResult result_from_json(const std::string& text) {
    try {
        const json doc = json::parse(text);
        const int version = doc.at("schema_version").get<int>();
        if (version != kResultSchemaVersion) {
            throw InvalidInput("unsupported result schema version " + std::to_string(version));
        }
        RunResult r;
        r.kind = parse_curve(doc.at("kind").get<std::string>());
        const json& x = doc.at("x");
        r.x_name = x.at("name").get<std::string>();
        r.x_unit = x.at("unit").get<std::string>();
        r.x = read_numbers(x.at("values"));
        for (const json& s : doc.at("series")) {
            r.series.push_back(Series{s.at("name").get<std::string>(), read_numbers(s.at("mean")),
                                      read_numbers(s.at("stderr"))});
        }
        const json& m = doc.at("metadata");
        r.metadata.config_hash = m.at("config_hash").get<std::string>();
        r.metadata.seed = m.at("seed").get<std::uint64_t>();
        r.metadata.code_version = m.at("code_version").get<std::string>();
        r.metadata.trials = m.at("trials").get<long long>();
        r.metadata.draw_ledger = m.at("draw_ledger").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed result document: ") + e.what());
    }
}

std::string metadata_json(const RunResult& r, const std::string& timestamp, OutputFormat format) {
    json doc = metadata_object(r.metadata);
    doc["schema_version"] = kResultSchemaVersion;
    doc["kind"] = curve_name(r.kind);
    doc["format"] = format == OutputFormat::Csv ? "csv" : "json";
    doc["timestamp"] = timestamp;
    return doc.dump(2) + '\n';
}

void emit_results(const RunResult& r, OutputFormat format, const std::string& path) {
    write_file(path, format == OutputFormat::Csv ? to_csv(r) : to_json(r));
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &utc);
    write_file(path + ".meta.json", metadata_json(r, stamp, format));
}

} // namespace mmw
