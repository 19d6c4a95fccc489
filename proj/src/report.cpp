#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "vortex/experiments.hpp"

namespace vortex {

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::json json_num(double x) {
  if (std::isfinite(x)) return x;
  return num(x);
}

nlohmann::json json_complex(Complex z) { return {json_num(z.real()), json_num(z.imag())}; }

}  // namespace

std::string report_csv(const Report& r) {
  std::string out =
      "experiment,seed,word,mode,N,trials,quantity,estimate_re,estimate_im,stderr,prediction_re,prediction_im,"
      "zscore,criterion,pass,baseline_label,baseline_re,baseline_im,baseline_z\n";
  std::string kind = kind_name(r.config.kind), seed = std::to_string(r.config.seed);
  for (const auto& row : r.rows) {
    out += kind + "," + seed + "," + csv_field(row.word) + "," + csv_field(row.mode) + "," +
           std::to_string(row.dimension) + "," + std::to_string(row.trials) + "," + row.quantity + "," +
           num(row.estimate.real()) + "," + num(row.estimate.imag()) + "," + num(row.stderr) + ",";
    if (row.prediction) out += num(row.prediction->real()) + "," + num(row.prediction->imag()) + "," + num(row.zscore);
    else out += ",,";
    out += "," + row.criterion + "," + (row.pass ? "true" : "false") + "," + csv_field(row.baseline_label) + ",";
    if (row.baseline)
      out += num(row.baseline->real()) + "," + num(row.baseline->imag()) + "," + num(row.baseline_z);
    else
      out += ",,";
    out += "\n";
  }
  return out;
}

std::string report_json(const Report& r) {
  using nlohmann::json;
  json j;
  j["experiment"] = kind_name(r.config.kind);
  j["name"] = r.config.name;
  j["seed"] = r.config.seed;
  j["passed"] = r.passed();
  json crit = json::array();
  for (const auto& c : r.criteria) crit.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["criteria"] = crit;
  json fits = json::array();
  for (const auto& f : r.fits) {
    json dims = json::array();
    for (const auto& e : f.data)
      dims.push_back({{"N", e.dimension}, {"mean", json_complex(e.mean)}, {"stderr", json_num(e.stderr())}});
    fits.push_back({{"word", f.word},
                    {"c0", json_complex(f.c0)},
                    {"c1", json_complex(f.c1)},
                    {"var_c0", json_num(f.var_c0)},
                    {"var_c1", json_num(f.var_c1)},
                    {"cov_c0_c1", json_num(f.cov_c0c1)},
                    {"chi2", json_num(f.chi2)},
                    {"dof", f.dof},
                    {"residual_norm", json_num(f.residual_norm)},
                    {"data", dims}});
  }
  j["fits"] = fits;
  j["notes"] = r.notes;
  j["rows"] = r.rows.size();
  j["config"] = json::parse(config_to_json_text(r.config));
  return j.dump(2) + "\n";
}

}  // namespace vortex
