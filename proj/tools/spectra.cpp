// spectra: locus classification, chromaticity inversion and analysis runs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spectra/analysis.hpp"

#ifndef SPECTRA_DATA_DIR
#define SPECTRA_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace spectra;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitGeometry = 2;
constexpr int kExitFloor = 3;

struct Config {
  std::string sensor;
  std::string reference = "uniform";
  std::string model = "von-mises";
  std::string glue = "auto";
  double tol = 1e-8;
  std::size_t res = 64;
  double a_max = INFINITY;
  unsigned threads = 1;
  std::string out = ".";
  double hull_tol = kDefaultHullTolerance;
  double floor = 0.0;
  std::string targets;
  std::vector<double> widths{4, 8, 16, 32};
  double D = 1.0;
  std::vector<double> domain{0.0, 1.0};
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  std::string matrix;
  double eps = 0.01;
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Geometry:
    case ErrorKind::OutsideCone:
    case ErrorKind::Degenerate:
    case ErrorKind::Resolution: return kExitGeometry;
    default: return kExitIo;
  }
}

std::string resolve_sensor(const std::string& s) {
  if (s == "cie1931" || s == "d90") return std::string(SPECTRA_DATA_DIR) + "/" + s + ".csv";
  return s;
}

Sensor load_configured_sensor(const Config& c) {
  if (c.sensor.empty()) throw Error(ErrorKind::InvalidInput, "--sensor is required");
  return load_sensor_file(resolve_sensor(c.sensor));
}

Density load_reference(const Config& c, const Sensor& s) {
  if (c.reference == "uniform") return Density::constant(s.grid());
  return resample(load_density_file(c.reference), s.grid());
}

/// "400-518,582-700"
std::vector<std::pair<double, double>> parse_segments(const std::string& spec) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    auto dash = part.find('-', 1);
    if (dash == std::string::npos) throw Error(ErrorKind::InvalidInput, "bad segment '" + part + "'");
    double a = parse_number(part.substr(0, dash), 0);
    double b = parse_number(part.substr(dash + 1), 0);
    if (!(b > a)) throw Error(ErrorKind::InvalidInput, "empty segment '" + part + "'");
    if (!out.empty() && !(a >= out.back().second)) throw Error(ErrorKind::InvalidInput, "segments must be ordered");
    out.push_back({a, b});
  }
  if (out.empty()) throw Error(ErrorKind::InvalidInput, "no segments given");
  return out;
}

/// Gluing for downstream inversion; throws Geometry when the locus does not allow it.
TorusParam configured_gluing(const Config& c, const Sensor& sensor) {
  if (c.glue != "auto" && c.glue != "off") {
    auto segs = parse_segments(c.glue);
    std::vector<TorusPiece> pieces;
    double t = 0.0;
    for (auto [a, b] : segs) {
      if (a < sensor.grid().lambda_min() - 1e-9 || b > sensor.grid().lambda_max() + 1e-9) {
        throw Error(ErrorKind::Geometry, "segment outside the sensor support");
      }
      pieces.push_back({t, t + (b - a), a, b});
      t += b - a;
    }
    return TorusParam(std::move(pieces));
  }
  ClassifyOptions opt;
  opt.tolerance = c.hull_tol;
  auto rep = classify_convexity(sample_locus(sensor), opt);
  if (rep.cls == ConvexityClass::NonConvex) {
    throw Error(ErrorKind::Geometry, "locus is non-convex; no convex arcs to glue");
  }
  if (c.glue == "auto" && rep.cls == ConvexityClass::PiecewiseConvex) return glue_segments(rep);
  if (rep.cls == ConvexityClass::PiecewiseConvex) {
    std::cerr << "warning: piecewise-convex locus inverted without gluing\n";
  }
  return full_support(sensor);
}

std::ofstream open_out(const Config& c, const std::string& name) {
  fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write '" + (dir / name).string() + "'");
  return f;
}

void write_file(const Config& c, const std::string& name, const std::string& body) {
  auto f = open_out(c, name);
  f << body;
  if (!f) throw Error(ErrorKind::Io, "write failed for '" + name + "'");
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

void validate_common(const Config& c) {
  if (!(c.tol > 0.0)) throw Error(ErrorKind::InvalidInput, "--tol must be positive");
  if (!(c.a_max > 0.0)) throw Error(ErrorKind::InvalidInput, "--a-max must be positive");
  if (c.threads == 0) throw Error(ErrorKind::InvalidInput, "--threads must be at least 1");
}

int cmd_locus(const Config& c) {
  auto sensor = load_configured_sensor(c);
  ClassifyOptions opt;
  opt.tolerance = c.hull_tol;
  auto locus = sample_locus(sensor);
  auto rep = classify_convexity(locus, opt);
  write_file(c, "locus.csv", locus_csv(locus));
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(to_json(rep).dump());
  write_file(c, "locus.json", dump(j));
  std::cout << "class=" << to_string(rep.cls);
  for (auto [a, b] : rep.segments) std::cout << " [" << format_double(a) << "," << format_double(b) << "]";
  std::cout << "\n";
  return 0;
}

struct TargetRow {
  std::size_t line = 0;
  std::optional<Chromaticity> chroma;
  std::string error;
};

std::vector<TargetRow> read_targets(const std::string& path, std::size_t dims) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::vector<TargetRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = csv_detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    TargetRow r;
    r.line = line_no;
    try {
      auto fields = csv_detail::split(t);
      if (fields.size() != dims) {
        throw Error(ErrorKind::Parse, "expected " + std::to_string(dims) + " fields, got " + std::to_string(fields.size()));
      }
      std::vector<double> v;
      for (const auto& f : fields) v.push_back(parse_number(f, line_no));
      double sum = 0.0;
      for (double x : v) sum += x;
      if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorKind::InvalidInput, "components sum to " + format_double(sum));
      v.back() = 1.0 - (sum - v.back());
      r.chroma = Chromaticity(v);
    } catch (const Error& e) {
      r.error = e.what();
    }
    rows.push_back(std::move(r));
  }
  if (!header) throw Error(ErrorKind::Parse, path + ": missing header row");
  return rows;
}

std::string csv_field(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n') ch = ';';
  }
  return s;
}

int cmd_invert(const Config& c) {
  validate_common(c);
  if (c.targets.empty()) throw Error(ErrorKind::InvalidInput, "--targets is required");
  auto model = coverage_model_from_string(c.model);
  auto sensor = load_configured_sensor(c);
  auto ref = load_reference(c, sensor);
  auto rows = read_targets(c.targets, sensor.dims());
  std::ostringstream out;
  std::size_t solved = 0;
  if (model == CoverageModel::VonMises || model == CoverageModel::Step) {
    auto gluing = configured_gluing(c, sensor);
    InverterOptions io;
    io.a_max = c.a_max;
    ModelInverter inv(sensor, ref, gluing, model == CoverageModel::Step ? ModelKind::Step : ModelKind::VonMises, io);
    out << (model == CoverageModel::Step ? "line,status,s,delta,residual,message\n"
                                         : "line,status,s,a,b,residual,message\n");
    for (const auto& r : rows) {
      out << r.line << ',';
      if (!r.chroma) {
        out << "malformed,,," << (model == CoverageModel::Step ? "" : ",") << ',' << csv_field(r.error) << '\n';
        continue;
      }
      auto res = inv.invert({*r.chroma, c.tol, 200});
      out << to_string(res.status) << ',';
      if (res.solved()) ++solved;
      if (res.params && res.solved()) {
        if (auto* p = std::get_if<StepParams>(&*res.params)) {
          out << format_double(p->s) << ',' << format_double(p->delta) << ',';
        } else if (auto* q = std::get_if<VonMisesParams>(&*res.params)) {
          out << format_double(q->s) << ',' << format_double(q->a) << ',' << format_double(q->b) << ',';
        }
        out << format_double(res.residual) << ",\n";
      } else {
        out << (model == CoverageModel::Step ? ",,," : ",,,,") << csv_field(res.message) << '\n';
      }
    }
  } else {
    auto basis = model == CoverageModel::Gaussian ? LogLinearBasis::gaussian(sensor.grid())
                                                 : LogLinearBasis::cosine(sensor.grid());
    LocusHull hull(sample_locus(sensor));
    out << (model == CoverageModel::Gaussian ? "line,status,alpha,beta,gamma,residual,message\n"
                                             : "line,status,p0,p1,p2,residual,message\n");
    for (const auto& r : rows) {
      out << r.line << ',';
      if (!r.chroma) {
        out << "malformed,,,,," << csv_field(r.error) << '\n';
        continue;
      }
      double depth = hull.signed_distance(*r.chroma);
      if (depth < -kBoundaryBand) {
        out << "exterior,,,,,target outside the locus hull\n";
        continue;
      }
      auto res = invert_log_linear(sensor, ref, basis, Color{r.chroma->components()}, 1e-2 * c.tol);
      auto f = log_linear_density(basis, res.params.p);
      double resid = INFINITY;
      try {
        resid = l1_distance(chromaticity(color_of_density(sensor, ref, f)), *r.chroma);
      } catch (const Error&) {
      }
      bool ok = res.status == InversionStatus::Solved && resid <= c.tol;
      out << (ok ? "solved" : "no_convergence") << ',';
      if (!ok) {
        out << ",,,," << "best residual " << format_double(resid) << '\n';
        continue;
      }
      ++solved;
      std::vector<double> p = res.params.p;
      if (model == CoverageModel::Gaussian) {
        auto g = gaussian_from_log_linear(res.params, sensor.grid().lambda_min(), sensor.grid().lambda_max());
        p = {g.alpha, g.beta, g.gamma};
      }
      out << format_double(p[0]) << ',' << format_double(p[1]) << ',' << format_double(p[2]) << ','
          << format_double(resid) << ",\n";
    }
  }
  write_file(c, "invert.csv", out.str());
  double frac = rows.empty() ? 1.0 : double(solved) / double(rows.size());
  std::cout << "solved " << solved << "/" << rows.size() << "\n";
  return frac < c.floor ? kExitFloor : 0;
}

int cmd_coverage(const Config& c) {
  validate_common(c);
  if (c.res < 16) throw Error(ErrorKind::InvalidInput, "--res must be at least 16");
  auto model = coverage_model_from_string(c.model);
  auto sensor = load_configured_sensor(c);
  auto ref = load_reference(c, sensor);
  CoverageOptions opt;
  opt.tolerance = c.tol;
  opt.a_max = c.a_max;
  opt.threads = c.threads;
  if (model == CoverageModel::VonMises || model == CoverageModel::Step) opt.gluing = configured_gluing(c, sensor);
  auto rep = coverage_map(sensor, ref, model, c.res, opt);
  write_file(c, "coverage.json", dump(to_json(rep)));
  write_file(c, "coverage.csv", heatmap_csv(rep));
  std::cout << "solved " << rep.n_solved << "/" << rep.n_targets << " fraction " << format_double(rep.solved_fraction())
            << " max_residual " << format_double(rep.max_residual) << "\n";
  return rep.solved_fraction() < c.floor ? kExitFloor : 0;
}

int cmd_gauss_limit(const Config& c) {
  if (c.domain.size() != 2) throw Error(ErrorKind::InvalidInput, "--domain takes LO,HI");
  auto t = gaussian_convergence(c.D, c.widths, c.domain[0], c.domain[1]);
  auto csv = convergence_csv(t);
  write_file(c, "gauss_limit.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_closure(const Config& c) {
  if (c.trials == 0) throw Error(ErrorKind::InvalidInput, "--trials must be positive");
  auto rows = closure_report(c.trials, c.seed);
  auto csv = closure_csv(rows);
  write_file(c, "closure.csv", csv);
  std::cout << csv;
  for (const auto& r : rows) {
    if (r.add == Verdict::Inconclusive || r.mult == Verdict::Inconclusive) return kExitFloor;
  }
  return 0;
}

int cmd_banded(const Config& c) {
  if (c.matrix.empty()) throw Error(ErrorKind::InvalidInput, "--matrix is required");
  if (!(c.eps > 0.0)) throw Error(ErrorKind::InvalidInput, "--eps must be positive");
  auto sensor = load_configured_sensor(c);
  auto ref = load_reference(c, sensor);
  auto table = read_table_file(c.matrix);
  std::vector<Chromaticity> cols;
  for (std::size_t k = 0; k < table.columns.size(); ++k) {
    auto v = table.columns[k];
    if (v.size() != sensor.dims()) {
      throw Error(ErrorKind::InvalidInput, "matrix must have one row per sensor channel");
    }
    double s = 0.0;
    for (double x : v) s += x;
    if (!(s > 0.0)) throw Error(ErrorKind::InvalidInput, "column " + table.header[k] + " sums to zero");
    for (double& x : v) x /= s;
    cols.emplace_back(v);
  }
  auto con = banded_from_matrix(sensor, ref, cols, c.eps);
  nlohmann::ordered_json j;
  j["eps"] = c.eps;
  j["blocks_per_column"] = con.blocks_per_column;
  j["columns"] = table.header;
  j["sets"] = nlohmann::ordered_json::parse(to_json(ModelParams{con.sets}).dump());
  j["errors"] = con.errors;
  write_file(c, "banded.json", dump(j));
  double worst = 0.0;
  for (double e : con.errors) worst = std::max(worst, e);
  std::cout << "columns " << cols.size() << " max_error " << format_double(worst) << "\n";
  return worst <= c.eps ? 0 : kExitFloor;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse_number(csv_detail::trim(part), 0));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral color models: locus geometry, inversion and analysis"};
  app.set_config("--config", "", "key=value config file; flags override it");
  app.require_subcommand(1);
  Config c;
  std::string widths = "4,8,16,32";
  std::string domain = "0,1";

  auto add_sensor = [&](CLI::App* sub) {
    sub->add_option("--sensor", c.sensor, "sensor CSV, or a bundled fixture: cie1931, d90");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--hull-tol", c.hull_tol, "hull-vertex tolerance for classification");
  };
  auto add_inversion = [&](CLI::App* sub) {
    sub->add_option("--reference", c.reference, "uniform or a density CSV");
    sub->add_option("--model", c.model, "von-mises | step | gaussian | log-linear")
        ->check(CLI::IsMember({"von-mises", "step", "gaussian", "log-linear"}));
    sub->add_option("--glue", c.glue, "auto | off | LO-HI,LO-HI,...");
    sub->add_option("--tol", c.tol, "chromaticity residual tolerance (L1)");
    sub->add_option("--a-max", c.a_max, "amplitude cap for von Mises");
    sub->add_option("--threads", c.threads, "worker threads");
    sub->add_option("--floor", c.floor, "minimum solved fraction; exit 3 below it");
  };

  auto* locus = app.add_subcommand("locus", "sample and classify the spectral locus");
  add_sensor(locus);
  auto* invert = app.add_subcommand("invert", "invert a CSV of chromaticities");
  add_sensor(invert);
  add_inversion(invert);
  invert->add_option("--targets", c.targets, "CSV with a header and one chromaticity per row");
  auto* coverage = app.add_subcommand("coverage", "solve an interior chromaticity grid");
  add_sensor(coverage);
  add_inversion(coverage);
  coverage->add_option("--res", c.res, "grid divisions per axis");
  auto* gauss = app.add_subcommand("gauss-limit", "von Mises to Gaussian convergence table");
  gauss->add_option("--widths", widths, "comma-separated periods");
  gauss->add_option("--D", c.D, "bound on a and |b|");
  gauss->add_option("--domain", domain, "LO,HI");
  gauss->add_option("--out", c.out, "output directory");
  auto* closure = app.add_subcommand("closure", "sum and product closure residuals");
  closure->add_option("--trials", c.trials, "random pairs per family");
  closure->add_option("--seed", c.seed, "base seed");
  closure->add_option("--out", c.out, "output directory");
  auto* banded = app.add_subcommand("banded", "banded sets realizing a matrix of chromaticities");
  add_sensor(banded);
  banded->add_option("--reference", c.reference, "uniform or a density CSV");
  banded->add_option("--matrix", c.matrix, "CSV, one column per target, one row per channel");
  banded->add_option("--eps", c.eps, "chromaticity error bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitIo;
  }

  try {
    c.widths = parse_list(widths);
    c.domain = parse_list(domain);
    if (*locus) return cmd_locus(c);
    if (*invert) return cmd_invert(c);
    if (*coverage) return cmd_coverage(c);
    if (*gauss) return cmd_gauss_limit(c);
    if (*closure) return cmd_closure(c);
    if (*banded) return cmd_banded(c);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
