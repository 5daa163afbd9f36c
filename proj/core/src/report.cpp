#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "reefsurvey/harness.hpp"

namespace reef {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json bools(const std::vector<bool>& v) {
  json a = json::array();
  for (bool b : v) a.push_back(b ? 1 : 0);
  return a;
}

std::vector<bool> bools_from(const json& a) {
  std::vector<bool> v;
  for (const auto& x : a) v.push_back(x.get<int>() != 0);
  return v;
}

AnomalyCause cause_from(const std::string& s) {
  for (auto c : {AnomalyCause::Remora, AnomalyCause::Blockade, AnomalyCause::Flow, AnomalyCause::Unknown})
    if (s == to_string(c)) return c;
  throw std::invalid_argument("unknown anomaly cause: " + s);
}

}  // namespace

std::string trial_to_json(const TrialResult& r) {
  json arb = json::array();
  for (const auto& a : r.arbitration_log)
    arb.push_back({{"t", a.time}, {"g_f", a.g_f}, {"g_s", a.g_s}, {"g_aff", a.g_aff}, {"chosen", to_string(a.chosen)},
                   {"cause", to_string(a.cause)}});
  const json j = {{"scenario", r.scenario},
                  {"agent", r.agent},
                  {"condition", r.condition},
                  {"start_index", r.start_index},
                  {"start", {r.start.x, r.start.y}},
                  {"seed", r.seed},
                  {"classification", bools(r.classification)},
                  {"truth", bools(r.truth)},
                  {"tp", r.counts.tp},
                  {"fp", r.counts.fp},
                  {"tn", r.counts.tn},
                  {"fn", r.counts.fn},
                  {"arbitrations", r.arbitrations},
                  {"arbitrations_lawful", r.arbitrations_lawful},
                  {"formulated_chosen", r.formulated_chosen},
                  {"selections", r.selections},
                  {"formulations", r.formulations},
                  {"discrepancies", r.discrepancies},
                  {"remora_cleared", r.remora_cleared},
                  {"cycles_used", r.cycles_used},
                  {"arbitration_log", arb}};
  return j.dump();
}

TrialResult trial_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    TrialResult r;
    r.scenario = j.at("scenario").get<std::string>();
    r.agent = j.at("agent").get<std::string>();
    r.condition = j.at("condition").get<std::string>();
    r.start_index = j.at("start_index").get<int>();
    r.start = {j.at("start")[0].get<double>(), j.at("start")[1].get<double>()};
    r.seed = j.at("seed").get<std::uint64_t>();
    r.classification = bools_from(j.at("classification"));
    r.truth = bools_from(j.at("truth"));
    r.counts = {j.at("tp").get<long long>(), j.at("fp").get<long long>(), j.at("tn").get<long long>(),
                j.at("fn").get<long long>()};
    r.arbitrations = j.at("arbitrations").get<int>();
    r.arbitrations_lawful = j.at("arbitrations_lawful").get<int>();
    r.formulated_chosen = j.at("formulated_chosen").get<int>();
    r.selections = j.at("selections").get<int>();
    r.formulations = j.at("formulations").get<int>();
    r.discrepancies = j.at("discrepancies").get<int>();
    r.remora_cleared = j.at("remora_cleared").get<int>();
    r.cycles_used = j.at("cycles_used").get<Cycle>();
    if (j.contains("arbitration_log")) {
      for (const auto& a : j.at("arbitration_log")) {
        ArbitrationRecord rec;
        rec.time = a.at("t").get<Cycle>();
        rec.g_f = a.at("g_f").get<std::string>();
        rec.g_s = a.at("g_s").get<std::string>();
        rec.g_aff = a.at("g_aff").get<std::vector<std::string>>();
        rec.chosen = a.at("chosen").get<std::string>() == "formulated" ? Chosen::Formulated : Chosen::Selected;
        rec.cause = cause_from(a.at("cause").get<std::string>());
        r.arbitration_log.push_back(std::move(rec));
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed trial record: ") + e.what());
  }
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "scenario,agent,condition,TP,FP,TN,FN,accuracy,precision,recall,f1\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.scenario << ',' << r.agent << ',' << r.condition << ',' << m.counts.tp << ',' << m.counts.fp << ','
        << m.counts.tn << ',' << m.counts.fn << ',' << fixed(m.accuracy) << ',' << fixed(m.precision) << ','
        << fixed(m.recall) << ',' << fixed(m.f1) << '\n';
  }
  return out.str();
}

std::string results_json(const ExperimentResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    const auto& m = row.metrics;
    rows.push_back({{"scenario", row.scenario},
                    {"agent", row.agent},
                    {"condition", row.condition},
                    {"TP", m.counts.tp},
                    {"FP", m.counts.fp},
                    {"TN", m.counts.tn},
                    {"FN", m.counts.fn},
                    {"accuracy", fixed(m.accuracy)},
                    {"precision", fixed(m.precision)},
                    {"recall", fixed(m.recall)},
                    {"f1", fixed(m.f1)}});
  }
  long long arb = 0;
  long long lawful = 0;
  for (const auto& t : r.trials) {
    arb += t.arbitrations;
    lawful += t.arbitrations_lawful;
  }
  const json j = {{"table", r.plan.table},
                  {"seed", r.plan.seed},
                  {"trials_per_scenario", r.plan.trials},
                  {"trial_count", r.trials.size()},
                  {"arbitrations", arb},
                  {"arbitrations_lawful", lawful},
                  {"rows", rows}};
  return j.dump(2) + "\n";
}

std::string survey_log_csv(const SurveyRegion& region, const TrialLog& log) {
  std::ostringstream out;
  out << "cell,entry,exit,unique_count,strategy,partial,classified_hotspot\n";
  for (const auto& s : log.surveys) {
    const bool cls = log.classification.empty()
                         ? s.hotspot
                         : log.classification[static_cast<std::size_t>(region.linear_index(s.cell))];
    out << to_string(s.cell) << ',' << s.entry << ',' << s.exit << ',' << s.unique_count << ',' << to_string(s.strategy)
        << ',' << (s.partial ? 1 : 0) << ',' << (cls ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string epsilon_csv(const std::vector<double>& epsilon, int window) {
  std::ostringstream out;
  out << "cycle,epsilon\n";
  for (std::size_t i = 0; i < epsilon.size(); ++i) out << i * static_cast<std::size_t>(window) << ',' << fixed(epsilon[i], 9) << '\n';
  return out.str();
}

std::string phi_csv(const InfoMap& map) {
  std::ostringstream out;
  out << "x,y,phi\n";
  for (int iy = 0; iy < map.resolution(); ++iy)
    for (int ix = 0; ix < map.resolution(); ++ix) {
      const double x = map.domain().x0 + (ix + 0.5) * map.cell_width();
      const double y = map.domain().y0 + (iy + 0.5) * map.cell_height();
      out << fixed(x, 4) << ',' << fixed(y, 4) << ',' << fixed(map.at(ix, iy), 9) << '\n';
    }
  return out.str();
}

std::string svg_heatmap(const std::vector<double>& values, int rows, int cols, const std::string& title) {
  if (static_cast<int>(values.size()) != rows * cols) throw std::invalid_argument("heatmap size mismatch");
  const int px = std::max(4, 400 / std::max(rows, cols));
  const int top = 24;
  double lo = 0.0;
  double hi = 0.0;
  if (!values.empty()) {
    lo = *std::min_element(values.begin(), values.end());
    hi = *std::max_element(values.begin(), values.end());
  }
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * px << "\" height=\"" << rows * px + top
      << "\">\n";
  out << "<text x=\"4\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">" << title << "</text>\n";
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double v = values[static_cast<std::size_t>(r * cols + c)];
      const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      const int red = static_cast<int>(255 * t);
      const int blue = 255 - red;
      out << "<rect x=\"" << c * px << "\" y=\"" << top + (rows - 1 - r) * px << "\" width=\"" << px << "\" height=\""
          << px << "\" fill=\"rgb(" << red << ",64," << blue << ")\"/>\n";
    }
  out << "</svg>\n";
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace reef
