#include "pireg/io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace pireg {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

using nlohmann::json;

double require_number(const json& obj, const std::string& section, const char* key) {
  if (!obj.contains(key)) throw ParseError(section + "." + key + ": missing");
  const json& v = obj.at(key);
  if (!v.is_number()) throw ParseError(section + "." + key + ": not a number");
  return v.get<double>();
}

}  // namespace

ScenarioFile parse_scenario_json(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError(origin + ": top level must be an object");

  ScenarioFile file;
  if (!doc.contains("scenario") || !doc["scenario"].is_object()) {
    throw ParseError(origin + ": scenario: missing section");
  }
  const json& sc = doc["scenario"];
  file.scenario.a = require_number(sc, "scenario", "a");
  file.scenario.b_min = require_number(sc, "scenario", "b_min");
  file.scenario.b_max = require_number(sc, "scenario", "b_max");
  file.scenario.x_star = require_number(sc, "scenario", "x_star");
  file.scenario.u_star = require_number(sc, "scenario", "u_star");
  file.scenario.v_star = require_number(sc, "scenario", "v_star");

  if (!doc.contains("outflow") || !doc["outflow"].is_object()) {
    throw ParseError(origin + ": outflow: missing section");
  }
  const json& of = doc["outflow"];
  if (!of.contains("family") || !of["family"].is_string()) {
    throw ParseError(origin + ": outflow.family: missing or not a string");
  }
  if (of["family"].get<std::string>() != "exp_power") {
    throw ParseError(origin + ": outflow.family: unsupported family '" +
                     of["family"].get<std::string>() + "' (only exp_power)");
  }
  if (!of.contains("members") || !of["members"].is_array() || of["members"].empty()) {
    throw ParseError(origin + ": outflow.members: missing or empty array");
  }
  for (std::size_t i = 0; i < of["members"].size(); ++i) {
    const json& m = of["members"][i];
    const std::string section = "outflow.members[" + std::to_string(i) + "]";
    if (!m.is_object()) throw ParseError(origin + ": " + section + ": not an object");
    OutflowMember member;
    member.p = require_number(m, section, "p");
    member.c = require_number(m, section, "c");
    member.delta = require_number(m, section, "delta");
    file.outflow.members.push_back(member);
  }

  if (!doc.contains("gains") || !doc["gains"].is_object()) {
    throw ParseError(origin + ": gains: missing section");
  }
  file.gains.k1 = require_number(doc["gains"], "gains", "k1");
  file.gains.k2 = require_number(doc["gains"], "gains", "k2");

  if (doc.contains("h2")) {
    if (!doc["h2"].is_object()) throw ParseError(origin + ": h2: not an object");
    const json& h2 = doc["h2"];
    SectorBounds p;
    p.r = require_number(h2, "h2", "r");
    p.q = require_number(h2, "h2", "q");
    p.L = require_number(h2, "h2", "L");
    p.M = require_number(h2, "h2", "M");
    p.lambda1 = require_number(h2, "h2", "lambda1");
    p.gamma1 = require_number(h2, "h2", "gamma1");
    p.lambda2 = require_number(h2, "h2", "lambda2");
    p.gamma2 = require_number(h2, "h2", "gamma2");
    file.h2 = p;
  }
  return file;
}

ScenarioFile load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_json(buf.str(), path.string());
}

std::string scenario_to_json(const ScenarioFile& file) {
  // Hand-rolled emission keeps the 17-significant-digit contract explicit.
  std::ostringstream os;
  auto kv = [&](const char* key, double v) { os << "\"" << key << "\": " << format_double(v); };
  os << "{\n  \"scenario\": {";
  kv("a", file.scenario.a);
  os << ", ";
  kv("b_min", file.scenario.b_min);
  os << ", ";
  kv("b_max", file.scenario.b_max);
  os << ", ";
  kv("x_star", file.scenario.x_star);
  os << ", ";
  kv("u_star", file.scenario.u_star);
  os << ", ";
  kv("v_star", file.scenario.v_star);
  os << "},\n  \"outflow\": {\"family\": \"exp_power\", \"members\": [";
  for (std::size_t i = 0; i < file.outflow.members.size(); ++i) {
    if (i > 0) os << ", ";
    os << "{";
    kv("p", file.outflow.members[i].p);
    os << ", ";
    kv("c", file.outflow.members[i].c);
    os << ", ";
    kv("delta", file.outflow.members[i].delta);
    os << "}";
  }
  os << "]},\n  \"gains\": {";
  kv("k1", file.gains.k1);
  os << ", ";
  kv("k2", file.gains.k2);
  os << "}";
  if (file.h2) {
    os << ",\n  \"h2\": {";
    kv("r", file.h2->r);
    os << ", ";
    kv("q", file.h2->q);
    os << ", ";
    kv("L", file.h2->L);
    os << ", ";
    kv("M", file.h2->M);
    os << ", ";
    kv("lambda1", file.h2->lambda1);
    os << ", ";
    kv("gamma1", file.h2->gamma1);
    os << ", ";
    kv("lambda2", file.h2->lambda2);
    os << ", ";
    kv("gamma2", file.h2->gamma2);
    os << "}";
  }
  os << "\n}\n";
  return os.str();
}

void save_scenario_file(const ScenarioFile& file, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  out << scenario_to_json(file);
}

std::vector<double> read_column(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::vector<double> values;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    double v = 0.0;
    const char* begin = line.data();
    const char* end = begin + line.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
      if (first) {  // tolerate a single header line
        first = false;
        continue;
      }
      throw ParseError(path.string() + ": bad numeric line '" + line + "'");
    }
    first = false;
    values.push_back(v);
  }
  if (values.empty()) throw ParseError(path.string() + ": no numeric values");
  return values;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::span<const std::string_view> header)
    : out_(path), width_(header.size()) {
  if (!out_) throw ParseError(path.string() + ": cannot open for writing");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) {
  if (values.size() != width_) throw ParseError("csv row width does not match header");
  std::size_t i = 0;
  for (double v : values) {
    if (i++ > 0) out_ << ',';
    out_ << format_double(v);
  }
  out_ << '\n';
}

void CsvWriter::row(std::span<const std::string> cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void Report::add(std::string_view key, double v) { entries_.emplace_back(key, format_double(v)); }
void Report::add(std::string_view key, std::int64_t v) {
  entries_.emplace_back(key, std::to_string(v));
}
void Report::add(std::string_view key, bool v) { entries_.emplace_back(key, v ? "true" : "false"); }
void Report::add(std::string_view key, std::string_view v) { entries_.emplace_back(key, v); }

void Report::print(std::ostream& os) const {
  for (const auto& [k, v] : entries_) os << k << " = " << v << '\n';
}

void Report::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  print(out);
}

const std::string* Report::find(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

double Report::get_double(std::string_view key) const {
  const std::string* v = find(key);
  if (v == nullptr) throw ParseError("report: missing key '" + std::string(key) + "'");
  double out = 0.0;
  const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
  if (res.ec != std::errc{}) throw ParseError("report: key '" + std::string(key) + "' not numeric");
  return out;
}

Report parse_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  Report rep;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t pos = line.find(" = ");
    if (pos == std::string::npos) continue;
    rep.add(line.substr(0, pos), std::string_view(line).substr(pos + 3));
  }
  return rep;
}

}  // namespace pireg
