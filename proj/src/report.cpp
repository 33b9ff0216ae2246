#include "parahom/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <system_error>

#include <json.hpp>

#include "parahom/error.hpp"

namespace parahom {

namespace {

using nlohmann::json;

json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

double number(const json& j, const std::string& key) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
  }
  throw ConfigError(key, "expected a number");
}

const json& field(const json& j, const std::string& name, const std::string& key) {
  if (!j.is_object() || !j.contains(name)) throw ConfigError(key, "missing field");
  return j.at(name);
}

std::string text(const json& j, const std::string& name, const std::string& key) {
  const json& v = field(j, name, key);
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

bool flag(const json& j, const std::string& name, const std::string& key) {
  const json& v = field(j, name, key);
  if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
  return v.get<bool>();
}

std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const std::string& command, const Config& config) {
  const std::uint64_t h = fnv1a(command + "\n" + render_config(config));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::string render_csv(const SweepReport& report) {
  std::string out = "epsilon,h,tau,metric,lhs,rhs,ratio\n";
  for (const auto& r : report.records) {
    out += format_number(r.epsilon) + "," + format_number(r.h) + "," + format_number(r.tau) + "," + r.metric + "," +
           format_number(r.lhs) + "," + format_number(r.rhs) + "," + format_number(r.ratio) + "\n";
  }
  return out;
}

std::string render_json(const SweepReport& report, const std::string& command, const Config& config) {
  const SweepSummary& s = report.summary;
  json j;
  j["command"] = command;
  j["hash"] = config_hash(command, config);
  j["kind"] = to_string(report.kind);
  j["config"] = render_config(config);
  j["summary"] = {{"pass", s.pass},           {"min_ratio", number(s.min_ratio)}, {"max_ratio", number(s.max_ratio)},
                  {"spread", number(s.spread)}, {"span", number(s.span)},         {"rate", number(s.rate)},
                  {"r2", number(s.r2)},         {"monotone", s.monotone},         {"note", s.note}};
  json records = json::array();
  for (const auto& r : report.records) {
    records.push_back({{"epsilon", number(r.epsilon)},
                       {"h", number(r.h)},
                       {"tau", number(r.tau)},
                       {"metric", r.metric},
                       {"lhs", number(r.lhs)},
                       {"rhs", number(r.rhs)},
                       {"ratio", number(r.ratio)}});
  }
  j["records"] = std::move(records);
  return j.dump(2) + "\n";
}

StoredReport report_from_json(const std::string& input) {
  json j;
  try {
    j = json::parse(input);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON report: ") + e.what());
  }
  StoredReport out;
  out.command = text(j, "command", "command");
  out.hash = text(j, "hash", "hash");
  out.config = text(j, "config", "config");
  out.report.kind = experiment_from_string(text(j, "kind", "kind"));
  const json& s = field(j, "summary", "summary");
  SweepSummary& sum = out.report.summary;
  sum.pass = flag(s, "pass", "summary.pass");
  sum.monotone = flag(s, "monotone", "summary.monotone");
  sum.note = text(s, "note", "summary.note");
  for (const auto& [name, target] : std::map<std::string, double*>{{"min_ratio", &sum.min_ratio},
                                                                    {"max_ratio", &sum.max_ratio},
                                                                    {"spread", &sum.spread},
                                                                    {"span", &sum.span},
                                                                    {"rate", &sum.rate},
                                                                    {"r2", &sum.r2}}) {
    *target = number(field(s, name, "summary." + name), "summary." + name);
  }
  const json& records = field(j, "records", "records");
  if (!records.is_array()) throw ConfigError("records", "expected a list");
  for (const auto& r : records) {
    SweepRecord rec;
    rec.metric = text(r, "metric", "records.metric");
    for (const auto& [name, target] : std::map<std::string, double*>{{"epsilon", &rec.epsilon},
                                                                      {"h", &rec.h},
                                                                      {"tau", &rec.tau},
                                                                      {"lhs", &rec.lhs},
                                                                      {"rhs", &rec.rhs},
                                                                      {"ratio", &rec.ratio}}) {
      *target = number(field(r, name, "records." + name), "records." + name);
    }
    out.report.records.push_back(std::move(rec));
  }
  return out;
}

std::string render_svg(const SweepReport& report) {
  constexpr double width = 640, height = 400, margin = 50;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& r : report.records) {
    if (!(r.epsilon > 0) || !std::isfinite(r.ratio)) continue;
    const double x = std::log2(r.epsilon);
    series[r.metric].emplace_back(x, r.ratio);
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, r.ratio);
    y1 = std::max(y1, r.ratio);
  }
  if (x1 <= x0) {
    x0 -= 1;
    x1 += 1;
  }
  if (y1 <= y0) {
    y0 -= 1;
    y1 += 1;
  }
  auto px = [&](double x) { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); };
  auto py = [&](double y) { return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\">\n";
  out += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  out += "<line x1=\"50\" y1=\"350\" x2=\"590\" y2=\"350\" stroke=\"black\"/>\n";
  out += "<line x1=\"50\" y1=\"50\" x2=\"50\" y2=\"350\" stroke=\"black\"/>\n";
  out += "<text x=\"320\" y=\"390\" text-anchor=\"middle\">log2 epsilon</text>\n";
  out += "<text x=\"15\" y=\"200\" transform=\"rotate(-90 15 200)\" text-anchor=\"middle\">ratio</text>\n";
  out += "<text x=\"45\" y=\"" + svg_number(py(y1) + 4) + "\" text-anchor=\"end\" font-size=\"10\">" +
         format_number(y1) + "</text>\n";
  out += "<text x=\"45\" y=\"" + svg_number(py(y0) + 4) + "\" text-anchor=\"end\" font-size=\"10\">" +
         format_number(y0) + "</text>\n";
  int c = 0;
  for (auto& [metric, points] : series) {
    std::sort(points.begin(), points.end());
    const char* color = colors[c % 6];
    std::string pts;
    for (const auto& [x, y] : points) pts += (pts.empty() ? "" : " ") + svg_number(px(x)) + "," + svg_number(py(y));
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" points=\"" + pts + "\"/>\n";
    out += "<text x=\"" + svg_number(width - margin) + "\" y=\"" + svg_number(margin + 14.0 * c) +
           "\" text-anchor=\"end\" font-size=\"11\" fill=\"" + color + "\">" + metric + "</text>\n";
    ++c;
  }
  out += "</svg>\n";
  return out;
}

std::vector<std::filesystem::path> write_artifacts(const std::filesystem::path& dir,
                                                   const std::vector<Artifact>& artifacts) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(dir.string(), "cannot create output directory");

  std::vector<fs::path> temps, finals;
  auto cleanup = [&](std::size_t renamed) {
    std::error_code ignore;
    for (const auto& t : temps) fs::remove(t, ignore);
    for (std::size_t i = 0; i < renamed; ++i) fs::remove(finals[i], ignore);
  };
  for (const auto& a : artifacts) {
    const fs::path final_path = dir / a.name;
    const fs::path temp = dir / ("." + a.name + ".tmp");
    finals.push_back(final_path);
    temps.push_back(temp);
    std::ofstream os(temp, std::ios::binary | std::ios::trunc);
    if (os) os.write(a.contents.data(), std::streamsize(a.contents.size()));
    if (os) os.close();
    if (!os) {
      cleanup(0);
      throw IoError(final_path.string(), "write failed");
    }
  }
  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    fs::rename(temps[i], finals[i], ec);
    if (ec) {
      cleanup(i);
      throw IoError(finals[i].string(), "rename failed: " + ec.message());
    }
  }
  return finals;
}

}  // namespace parahom
