/*
 * Copyright 2026 The AutoFT Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "autoft/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "autoft/csv.hpp"
#include "autoft/dcn_model.hpp"
#include "autoft/error.hpp"
#include "json.hpp"

namespace autoft {

double Auc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    Fail(ErrorKind::kShape, "auc: " + std::to_string(labels.size()) + " labels but " +
                                std::to_string(scores.size()) + " scores");
  }
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos = 0.0;
  double neg = 0.0;
  double rank_sum = 0.0;  // sum of positive midranks (1-based)
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    double tied_pos = 0.0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      tied_pos += labels[order[j]] ? 1.0 : 0.0;
      ++j;
    }
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    rank_sum += tied_pos * midrank;
    pos += tied_pos;
    neg += static_cast<double>(j - i) - tied_pos;
    i = j;
  }
  if (pos == 0.0 || neg == 0.0) {
    Fail(ErrorKind::kMetricUndefined, "auc needs at least one positive and one negative label");
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double LogLoss(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    Fail(ErrorKind::kShape, "logloss: label/score length mismatch");
  }
  if (labels.empty()) Fail(ErrorKind::kMetricUndefined, "logloss of an empty set");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) total += CrossEntropy(labels[i], scores[i]);
  return total / static_cast<double>(labels.size());
}

RouteDump MakeRouteDump(std::span<const RouteDecision> routes, const ArchConfig& arch) {
  RouteDump dump;
  dump.num_embed = arch.num_fields();
  dump.num_cross = arch.num_cross();
  dump.num_deep = arch.deep_layers.size();
  for (std::size_t i = 0; i < routes.size(); ++i) {
    RouteDumpRow row;
    row.instance_id = i;
    row.embed = routes[i].embed.hard;
    row.cross = routes[i].cross.hard;
    row.deep = routes[i].deep.hard;
    dump.rows.push_back(std::move(row));
  }
  return dump;
}

std::string RouteDumpToCsv(const RouteDump& dump) {
  std::ostringstream os;
  os << "instance_id";
  for (std::size_t i = 0; i < dump.num_embed; ++i) os << ",embed_" << i;
  for (std::size_t i = 0; i < dump.num_cross; ++i) os << ",cross_" << i;
  for (std::size_t i = 0; i < dump.num_deep; ++i) os << ",deep_" << i;
  os << "\n";
  for (const auto& row : dump.rows) {
    os << row.instance_id;
    for (int b : row.embed) os << ',' << b;
    for (int b : row.cross) os << ',' << b;
    for (int b : row.deep) os << ',' << b;
    os << "\n";
  }
  return os.str();
}

RouteDump ParseRouteDump(const std::string& csv_text) {
  std::istringstream in(csv_text);
  const CsvTable table = ParseCsv(in, "route dump");
  if (table.header.empty() || table.header[0] != "instance_id") {
    Fail(ErrorKind::kData, "route dump line 1: first column must be instance_id");
  }
  RouteDump dump;
  // Columns must be grouped embed_*, cross_*, deep_* with consecutive indices.
  std::vector<int> kinds;
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    const std::string& h = table.header[c];
    auto check = [&](const std::string& prefix, std::size_t& count, int kind) {
      if (h.rfind(prefix, 0) != 0) return false;
      if (h != prefix + std::to_string(count) || (!kinds.empty() && kinds.back() > kind)) {
        Fail(ErrorKind::kData, "route dump line 1: unexpected column " + h);
      }
      ++count;
      kinds.push_back(kind);
      return true;
    };
    if (!check("embed_", dump.num_embed, 0) && !check("cross_", dump.num_cross, 1) &&
        !check("deep_", dump.num_deep, 2)) {
      Fail(ErrorKind::kData, "route dump line 1: unknown column " + h);
    }
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const std::size_t line = r + 2;
    RouteDumpRow row;
    {
      std::size_t id = 0;
      const std::string& s = cells[0];
      auto res = std::from_chars(s.data(), s.data() + s.size(), id);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        Fail(ErrorKind::kData, "route dump line " + std::to_string(line) + ": bad instance id '" +
                                   s + "'");
      }
      row.instance_id = id;
    }
    for (std::size_t c = 1; c < cells.size(); ++c) {
      int bit;
      if (cells[c] == "0") {
        bit = 0;
      } else if (cells[c] == "1") {
        bit = 1;
      } else {
        Fail(ErrorKind::kData, "route dump line " + std::to_string(line) + ": bit '" + cells[c] +
                                   "' is not 0 or 1");
      }
      switch (kinds[c - 1]) {
        case 0: row.embed.push_back(bit); break;
        case 1: row.cross.push_back(bit); break;
        default: row.deep.push_back(bit); break;
      }
    }
    dump.rows.push_back(std::move(row));
  }
  return dump;
}

void WriteRouteDump(const std::string& path, const RouteDump& dump) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path);
  out << RouteDumpToCsv(dump);
}

RouteDump ReadRouteDump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return ParseRouteDump(buf.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

namespace {

std::vector<UnitFraction> Fractions(const std::vector<std::size_t>& pretrained, std::size_t n) {
  std::vector<UnitFraction> out;
  for (std::size_t count : pretrained) {
    UnitFraction u;
    u.pretrained = n ? static_cast<double>(count) / static_cast<double>(n) : 0.0;
    u.finetuned = 1.0 - u.pretrained;
    out.push_back(u);
  }
  return out;
}

std::vector<double> FinetuneSeries(const std::vector<UnitFraction>& units) {
  std::vector<double> out;
  for (const auto& u : units) out.push_back(u.finetuned);
  return out;
}

}  // namespace

std::vector<double> RoutingReport::CrossFinetuneByDepth() const { return FinetuneSeries(cross); }
std::vector<double> RoutingReport::DeepFinetuneByDepth() const { return FinetuneSeries(deep); }

RoutingReport RoutingFractions(const RouteDump& dump) {
  std::vector<std::size_t> e(dump.num_embed, 0), c(dump.num_cross, 0), d(dump.num_deep, 0);
  for (const auto& row : dump.rows) {
    if (row.embed.size() != dump.num_embed || row.cross.size() != dump.num_cross ||
        row.deep.size() != dump.num_deep) {
      Fail(ErrorKind::kData, "route dump row for instance " + std::to_string(row.instance_id) +
                                 " has the wrong number of bits");
    }
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += static_cast<std::size_t>(row.embed[i]);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += static_cast<std::size_t>(row.cross[i]);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += static_cast<std::size_t>(row.deep[i]);
  }
  RoutingReport report;
  report.instances = dump.rows.size();
  report.embed = Fractions(e, report.instances);
  report.cross = Fractions(c, report.instances);
  report.deep = Fractions(d, report.instances);
  return report;
}

std::string FormatDouble(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string RoutingFractionsCsv(const RoutingReport& report) {
  std::ostringstream os;
  os << "component,unit,pretrained_fraction,finetuned_fraction\n";
  auto emit = [&](const char* name, const std::vector<UnitFraction>& units) {
    for (std::size_t i = 0; i < units.size(); ++i) {
      os << name << ',' << i << ',' << FormatDouble(units[i].pretrained) << ','
         << FormatDouble(units[i].finetuned) << "\n";
    }
  };
  emit("embed", report.embed);
  emit("cross", report.cross);
  emit("deep", report.deep);
  return os.str();
}

std::string RoutingSummaryText(const RoutingReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "instances: " << report.instances << "\n";
  auto emit = [&](const char* name, const std::vector<UnitFraction>& units) {
    os << name << " fine-tuned fraction by unit:";
    if (units.empty()) os << " (none)";
    for (const auto& u : units) os << ' ' << u.finetuned;
    os << "\n";
  };
  emit("embed", report.embed);
  emit("cross", report.cross);
  emit("deep", report.deep);
  return os.str();
}

std::string RunSummaryToJson(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["method"] = s.method;
  j["stage"] = s.stage;
  j["seed"] = s.seed;
  j["test_auc"] = s.test_auc;
  j["test_logloss"] = s.test_logloss;
  j["test_instances"] = s.test_instances;
  return j.dump(2) + "\n";
}

RunSummary RunSummaryFromJson(const std::string& text, const std::string& source) {
  RunSummary s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.method = j.at("method").get<std::string>();
    s.stage = j.at("stage").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.test_auc = j.at("test_auc").get<double>();
    s.test_logloss = j.at("test_logloss").get<double>();
    s.test_instances = j.at("test_instances").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kData, source + ": bad run summary: " + e.what());
  }
  return s;
}

const std::vector<std::string>& MethodOrder() {
  static const std::vector<std::string> order = {
      "Target-only", "Source-only", "All", "Fine-Tune", "AutoFT",
      "AutoFT-Embedding", "AutoFT-Cross", "AutoFT-Deep", "AutoFT-Cross&Deep"};
  return order;
}

std::pair<double, double> MeanStd(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

MetricReport BuildResultsTable(std::span<const RunSummary> runs) {
  std::map<std::string, std::vector<const RunSummary*>> by_method;
  for (const auto& r : runs) by_method[r.method].push_back(&r);
  std::vector<std::string> names;
  for (const auto& m : MethodOrder()) {
    if (by_method.count(m)) names.push_back(m);
  }
  for (const auto& [m, _] : by_method) {
    if (std::find(names.begin(), names.end(), m) == names.end()) names.push_back(m);
  }
  MetricReport report;
  for (const auto& name : names) {
    auto group = by_method[name];
    std::sort(group.begin(), group.end(),
              [](const RunSummary* a, const RunSummary* b) { return a->seed < b->seed; });
    std::vector<double> aucs, losses;
    MethodRow row;
    row.method = name;
    for (const RunSummary* r : group) {
      aucs.push_back(r->test_auc);
      losses.push_back(r->test_logloss);
      row.seeds.push_back(r->seed);
      row.instances = r->test_instances;
    }
    std::tie(row.auc_mean, row.auc_std) = MeanStd(aucs);
    std::tie(row.logloss_mean, row.logloss_std) = MeanStd(losses);
    report.rows.push_back(std::move(row));
  }
  if (!report.rows.empty()) {
    auto best_auc = std::max_element(report.rows.begin(), report.rows.end(),
                                     [](const MethodRow& a, const MethodRow& b) {
                                       return a.auc_mean < b.auc_mean;
                                     });
    auto best_ll = std::min_element(report.rows.begin(), report.rows.end(),
                                    [](const MethodRow& a, const MethodRow& b) {
                                      return a.logloss_mean < b.logloss_mean;
                                    });
    best_auc->best_auc = true;
    best_ll->best_logloss = true;
  }
  return report;
}

MetricReport ResultsTableFromDirs(std::span<const std::string> run_dirs) {
  std::vector<RunSummary> runs;
  for (const auto& dir : run_dirs) {
    const std::filesystem::path path = std::filesystem::path(dir) / "summary.json";
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    runs.push_back(RunSummaryFromJson(buf.str(), path.string()));
  }
  return BuildResultsTable(runs);
}

std::string ResultsTableCsv(const MetricReport& report) {
  std::ostringstream os;
  os << "method,auc_mean,auc_std,logloss_mean,logloss_std,n_seeds,best_auc,best_logloss\n";
  for (const auto& r : report.rows) {
    os << r.method << ',' << FormatDouble(r.auc_mean) << ',' << FormatDouble(r.auc_std) << ','
       << FormatDouble(r.logloss_mean) << ',' << FormatDouble(r.logloss_std) << ','
       << r.seeds.size() << ',' << (r.best_auc ? 1 : 0) << ',' << (r.best_logloss ? 1 : 0)
       << "\n";
  }
  return os.str();
}

std::string ResultsTableText(const MetricReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "method" << std::right << std::setw(22) << "AUC"
     << std::setw(22) << "LogLoss" << std::setw(8) << "seeds" << "\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& r : report.rows) {
    std::ostringstream auc, ll;
    auc << std::fixed << std::setprecision(4) << r.auc_mean << " +- " << r.auc_std
        << (r.best_auc ? " *" : "  ");
    ll << std::fixed << std::setprecision(4) << r.logloss_mean << " +- " << r.logloss_std
       << (r.best_logloss ? " *" : "  ");
    os << std::left << std::setw(20) << r.method << std::right << std::setw(22) << auc.str()
       << std::setw(22) << ll.str() << std::setw(8) << r.seeds.size() << "\n";
  }
  os << "(* best value in column)\n";
  return os.str();
}

}  // namespace autoft
