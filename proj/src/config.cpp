#include "bbmlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bbmlab/expr.hpp"

namespace bbmlab {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

json parse_toml_scalar(const std::string& tok) {
  const std::string t = trim(tok);
  if (t.empty()) throw ConfigError("toml: empty value");
  if (t.front() == '"') {
    if (t.size() < 2 || t.back() != '"') throw ConfigError("toml: unterminated string");
    return t.substr(1, t.size() - 2);
  }
  if (t == "true") return true;
  if (t == "false") return false;
  try {
    size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size()) {
      if (t.find_first_of(".eE") == std::string::npos)
        return static_cast<long long>(std::llround(v));
      return v;
    }
  } catch (...) {
  }
  throw ConfigError("toml: cannot parse value '" + t + "'");
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

}  // namespace

json parse_toml_subset(const std::string& text) {
  json root = json::object();
  json* section = &root;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("toml: malformed section: " + line);
      std::string path = line.substr(1, line.size() - 2);
      section = &root;
      std::istringstream ps(path);
      std::string part;
      while (std::getline(ps, part, '.')) {
        part = trim(part);
        section = &((*section)[part]);
      }
      if (section->is_null()) *section = json::object();
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("toml: expected key = value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!val.empty() && val.front() == '[') {
      if (val.back() != ']') throw ConfigError("toml: unterminated array: " + line);
      json arr = json::array();
      std::string body = val.substr(1, val.size() - 2);
      std::string tok;
      std::istringstream bs(body);
      while (std::getline(bs, tok, ','))
        if (!trim(tok).empty()) arr.push_back(parse_toml_scalar(tok));
      (*section)[key] = arr;
    } else {
      (*section)[key] = parse_toml_scalar(val);
    }
  }
  return root;
}

json load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string text = buf.str();
  // Sniff: a JSON config starts with '{' (or '['); everything else goes
  // through the TOML-subset reader.
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{' || c == '[') {
      try {
        return json::parse(text);
      } catch (const json::exception& e) {
        throw ConfigError("JSON parse error in " + path + ": " + e.what());
      }
    }
    break;
  }
  return parse_toml_subset(text);
}

KernelFamily kernel_from_spec(const json& spec) {
  if (!spec.is_object() || !spec.contains("type"))
    throw ConfigError("kernel spec: object with 'type' required");
  const std::string type = spec.at("type").get<std::string>();
  const int N = spec.value("N", 1);
  if (type == "fractional") return fractional_family(spec.value("p", 2.0), N);
  if (type == "zero") return zero_family(N);
  if (type == "ramp_indicator")
    return ramp_indicator_family(spec.value("p", 2.0), N, spec.value("radius", 1.0));
  if (type == "dominated_indicator")
    return dominated_indicator_family(spec.value("p", 2.0), N, spec.value("radius", 1.0));
  if (type == "table") {
    const auto radii = spec.at("radii").get<std::vector<double>>();
    const auto values = spec.at("values").get<std::vector<std::vector<double>>>();
    if (radii.empty() || values.empty())
      throw ConfigError("table kernel: radii and values required");
    for (const auto& row : values)
      if (row.size() != radii.size())
        throw ConfigError("table kernel: row length mismatch");
    std::vector<double> indices;
    if (spec.contains("indices")) indices = spec.at("indices").get<std::vector<double>>();
    KernelFamily f;
    f.dim = N;
    f.is_radial = true;
    f.label = "table";
    f.member = [radii, values, indices, N](double index) {
      size_t row = 0;
      if (!indices.empty()) {
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < indices.size(); ++i) {
          const double d = std::abs(indices[i] - index);
          if (d < best) {
            best = d;
            row = i;
          }
        }
      } else {
        row = std::min<size_t>(values.size() - 1,
                               static_cast<size_t>(std::max(0.0, index - 1.0)));
      }
      const std::vector<double> vals = values[row];
      const std::vector<double> rs = radii;
      Kernel k;
      k.dim = N;
      k.is_radial = true;
      k.support_radius = rs.back();
      k.label = "table";
      k.radial = [rs, vals](double r) {
        if (r >= rs.back()) return 0.0;
        if (r <= rs.front()) return vals.front();
        const auto it = std::upper_bound(rs.begin(), rs.end(), r);
        const size_t j = static_cast<size_t>(it - rs.begin());
        const double t = (r - rs[j - 1]) / (rs[j] - rs[j - 1]);
        return (1.0 - t) * vals[j - 1] + t * vals[j];
      };
      k.eval = [k, N](const Vec& z) { return k.radial(norm(z, N)); };
      return k;
    };
    return f;
  }
  if (type == "expr") {
    const Expr rho = Expr::parse(spec.at("rho").get<std::string>());
    const bool radial = spec.value("radial", false);
    std::optional<double> support;
    if (spec.contains("support_radius")) support = spec.at("support_radius").get<double>();
    std::optional<Expr> pl_prefactor;
    double pl_exponent = 0.0, pl_valid = 0.0;
    if (spec.contains("power_law")) {
      const json& pl = spec.at("power_law");
      pl_prefactor = Expr::parse(pl.at("prefactor").get<std::string>());
      pl_exponent = pl.at("exponent").get<double>();
      pl_valid = pl.value("valid_radius", std::numeric_limits<double>::infinity());
    }
    KernelFamily f;
    f.dim = N;
    f.is_radial = radial;
    f.label = "expr";
    f.member = [rho, radial, support, pl_prefactor, pl_exponent, pl_valid,
                N](double index) {
      Kernel k;
      k.dim = N;
      k.is_radial = radial;
      k.support_radius = support;
      k.label = "expr";
      k.eval = [rho, index, N](const Vec& z) {
        return rho.eval({{"r", norm(z, N)},
                         {"z1", z[0]},
                         {"z2", N == 2 ? z[1] : 0.0},
                         {"k", index},
                         {"s", index}});
      };
      if (radial)
        k.radial = [rho, index](double r) {
          return rho.eval({{"r", r}, {"z1", r}, {"z2", 0.0}, {"k", index}, {"s", index}});
        };
      if (pl_prefactor) {
        const double pref = pl_prefactor->eval({{"k", index}, {"s", index}});
        k.power_law = PowerLaw{pref, pl_exponent, pl_valid};
      }
      return k;
    };
    return f;
  }
  throw ConfigError("unknown kernel type: " + type);
}

WeightFamily weight_from_spec(const json& spec, int dim) {
  if (spec.is_string()) {
    if (spec.get<std::string>() == "one") return unit_weight(dim);
    throw ConfigError("unknown weight spec string: " + spec.get<std::string>());
  }
  if (!spec.is_object() || !spec.contains("type"))
    throw ConfigError("weight spec: object with 'type' required");
  const std::string type = spec.at("type").get<std::string>();
  if (type == "one") return unit_weight(dim);
  if (type == "product") {
    const Expr f = Expr::parse(spec.at("f").get<std::string>());
    const Expr fk =
        spec.contains("f_k") ? Expr::parse(spec.at("f_k").get<std::string>()) : f;
    const double lip = spec.at("lipschitz").get<double>();
    const double sup = spec.at("sup").get<double>();
    auto feval = [f, dim](const Vec& x) {
      return f.eval({{"x1", x[0]}, {"x2", dim == 2 ? x[1] : 0.0}, {"k", 0.0}});
    };
    auto fkeval = [fk, dim](double k, const Vec& x) {
      return fk.eval({{"x1", x[0]}, {"x2", dim == 2 ? x[1] : 0.0}, {"k", k}});
    };
    return product_weight(fkeval, feval, dim, lip, sup);
  }
  if (type == "expr") {
    const Expr w = Expr::parse(spec.at("w").get<std::string>());
    const Expr wk = spec.contains("w_k") ? Expr::parse(spec.at("w_k").get<std::string>()) : w;
    std::optional<std::function<double(double)>> modulus;
    if (spec.contains("lipschitz")) {
      const double L = spec.at("lipschitz").get<double>();
      modulus = [L](double t) { return L * t; };
    }
    const bool symmetric = spec.value("symmetric", false);
    auto weval = [w, dim](const Vec& x, const Vec& y) {
      return w.eval({{"x1", x[0]},
                     {"x2", dim == 2 ? x[1] : 0.0},
                     {"y1", y[0]},
                     {"y2", dim == 2 ? y[1] : 0.0},
                     {"k", 0.0}});
    };
    auto wkeval = [wk, dim](double k, const Vec& x, const Vec& y) {
      return wk.eval({{"x1", x[0]},
                      {"x2", dim == 2 ? x[1] : 0.0},
                      {"y1", y[0]},
                      {"y2", dim == 2 ? y[1] : 0.0},
                      {"k", k}});
    };
    return general_weight(wkeval, weval, dim, modulus, symmetric, "expr");
  }
  throw ConfigError("unknown weight type: " + type);
}

Grid grid_from_spec(const json& spec) {
  const int dim = spec.value("dim", 1);
  const double h = spec.at("h").get<double>();
  if (spec.contains("lo")) {
    const auto lo = spec.at("lo").get<std::vector<double>>();
    const auto hi = spec.at("hi").get<std::vector<double>>();
    if (static_cast<int>(lo.size()) < dim || static_cast<int>(hi.size()) < dim)
      throw ConfigError("grid spec: lo/hi shorter than dim");
    return Grid(dim, Vec{lo[0], dim == 2 ? lo[1] : 0.0}, Vec{hi[0], dim == 2 ? hi[1] : 0.0},
                h);
  }
  const double R = spec.at("support_radius").get<double>();
  const double margin = spec.value("margin", 2.0 * R);
  const double extent = std::ceil((R + margin) / h) * h;
  return Grid(dim, Vec{-extent, dim == 2 ? -extent : 0.0},
              Vec{extent, dim == 2 ? extent : 0.0}, h);
}

ClosedForm function_from_spec(const json& spec, int dim) {
  if (spec.is_string()) return parse_function_spec(spec.get<std::string>(), dim);
  if (!spec.is_object()) throw ConfigError("function spec: string or object required");
  ClosedForm f = parse_function_spec(spec.at("spec").get<std::string>(), dim);
  if (spec.contains("shift")) {
    const auto sh = spec.at("shift").get<std::vector<double>>();
    f = shifted(f, Vec{sh[0], sh.size() > 1 ? sh[1] : 0.0});
  }
  if (spec.contains("scale")) f = scaled(f, spec.at("scale").get<double>());
  return f;
}

GridFunction grid_function_from_spec(const json& spec, const Grid& g) {
  if (spec.is_object() && spec.contains("csv")) {
    GridFunction u = read_csv_file(spec.at("csv").get<std::string>());
    if (!u.grid.same_layout(g))
      throw ConfigError("grid function CSV does not match the configured grid");
    return u;
  }
  return sample_closed_form(function_from_spec(spec, g.dim), g);
}

DoubleLimitSchedule schedule_from_spec(const json& spec) {
  DoubleLimitSchedule s;
  if (spec.contains("deltas"))
    s.deltas = spec.at("deltas").get<std::vector<double>>();
  else
    for (int l = 4; l <= spec.value("l_max", 10); ++l) s.deltas.push_back(std::pow(2.0, -l));
  s.indices = spec.at("indices").get<std::vector<double>>();
  s.stabilization_rtol = spec.value("rtol", 1e-3);
  return s;
}

EnergyOptions energy_options_from_config(const json& cfg) {
  EnergyOptions opts;
  opts.truncation = cfg.value("trunc", 8.0);
  opts.delta = cfg.value("delta", 0.125);
  return opts;
}

}  // namespace bbmlab
