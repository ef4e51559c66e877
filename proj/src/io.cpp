#include "optdes/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace optdes {

using nlohmann::json;

std::string format_full(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string format_human(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

void write_design_csv(const std::string& path, const ModelSpec& spec, const Vector& values,
                      bool counts) {
  if (values.size() != spec.grid_size()) {
    throw DimensionError("design table has wrong size for the model");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "# design v1=" << spec.v1 << " d=" << spec.d << " v2=" << spec.v2
      << " ordering=k-fastest kind=" << (counts ? "counts" : "weights") << "\n";
  out << "i,k,value\n";
  for (Index i = 0; i < spec.v1; ++i) {
    for (Index k = 0; k < spec.d; ++k) {
      const double v = values[spec.flat(i, k)];
      out << (i + 1) << "," << (k + 1) << ",";
      if (counts) {
        out << static_cast<long>(std::llround(v));
      } else {
        out << format_full(v);
      }
      out << "\n";
    }
  }
  if (!out) throw IoError("write to " + path + " failed");
}

DesignTable read_design_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  DesignTable table;
  {
    std::istringstream header(line);
    std::string token;
    header >> token;
    if (token != "#") throw IoError(path + ": missing metadata line");
    header >> token;
    if (token != "design") throw IoError(path + ": not a design file");
    bool have_kind = false;
    while (header >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) throw IoError(path + ": bad metadata token " + token);
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "v1") table.v1 = std::stol(value);
      else if (key == "d") table.d = std::stol(value);
      else if (key == "v2") table.v2 = std::stol(value);
      else if (key == "ordering") {
        if (value != "k-fastest") throw IoError(path + ": unsupported ordering " + value);
      } else if (key == "kind") {
        table.counts = (value == "counts");
        have_kind = true;
      } else {
        throw IoError(path + ": unknown metadata key " + key);
      }
    }
    if (table.v1 < 1 || table.d < 1 || !have_kind) {
      throw IoError(path + ": incomplete metadata line");
    }
  }
  if (!std::getline(in, line) || line != "i,k,value") {
    throw IoError(path + ": missing column header");
  }
  table.values = Vector::Zero(table.v1 * table.d);
  Vector seen = Vector::Zero(table.v1 * table.d);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    long i = 0, k = 0;
    double value = 0.0;
    try {
      if (!std::getline(row, cell, ',')) throw IoError("");
      i = std::stol(cell);
      if (!std::getline(row, cell, ',')) throw IoError("");
      k = std::stol(cell);
      if (!std::getline(row, cell, ',')) throw IoError("");
      value = std::stod(cell);
    } catch (const std::exception&) {
      throw IoError(path + ": malformed row '" + line + "'");
    }
    if (i < 1 || i > table.v1 || k < 1 || k > table.d) {
      throw IoError(path + ": index out of range in row '" + line + "'");
    }
    const Index flat = (i - 1) * table.d + (k - 1);
    table.values[flat] = value;
    seen[flat] = 1.0;
  }
  if (seen.sum() != static_cast<double>(table.v1 * table.d)) {
    throw IoError(path + ": missing grid cells");
  }
  return table;
}

ApproxDesign to_approx_design(const ModelSpec& spec, const DesignTable& table, double* drift) {
  if (table.v1 != spec.v1 || table.d != spec.d) {
    throw DimensionError("design table does not match the model grid");
  }
  if (table.counts) {
    throw InvalidDesign("expected a weight table, got counts");
  }
  Vector xi = table.values;
  if (xi.minCoeff() < -1e-12) throw InvalidDesign("design table has negative weights");
  const double total = xi.sum();
  if (std::abs(total - 1.0) > 1e-3) {
    throw InvalidDesign("design weights sum to " + std::to_string(total));
  }
  if (drift) *drift = std::abs(total - 1.0);
  xi /= total;
  return make_approx_design(spec, std::move(xi));
}

ExactDesign to_exact_design(const ModelSpec& spec, const DesignTable& table) {
  if (table.v1 != spec.v1 || table.d != spec.d) {
    throw DimensionError("design table does not match the model grid");
  }
  IntVector counts(table.values.size());
  for (Index j = 0; j < table.values.size(); ++j) {
    const double v = table.values[j];
    const long rounded = std::llround(v);
    if (std::abs(v - static_cast<double>(rounded)) > 1e-9 || rounded < 0) {
      throw InvalidDesign("count table has a non-integer entry");
    }
    counts[j] = static_cast<int>(rounded);
  }
  return make_exact_design(spec, std::move(counts));
}

namespace {

Matrix parse_matrix(const json& spec, const std::string& what) {
  if (!spec.is_array() || spec.empty()) throw BadConfig(what + " must be a nonempty array");
  const Index rows = static_cast<Index>(spec.size());
  Index cols = -1;
  Matrix m;
  for (Index r = 0; r < rows; ++r) {
    const auto& row = spec[static_cast<std::size_t>(r)];
    if (!row.is_array()) throw BadConfig(what + " must be an array of arrays");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      m.resize(rows, cols);
    }
    if (static_cast<Index>(row.size()) != cols) throw BadConfig(what + " rows differ in length");
    for (Index c = 0; c < cols; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number()) {
        throw BadConfig(what + " has a non-numeric entry");
      }
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

double parse_p(const json& value) {
  if (value.is_number()) {
    const double p = value.get<double>();
    if (p > 0.0) throw BadConfig("criterion p must be <= 0");
    return p;
  }
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    if (s == "D" || s == "d") return 0.0;
    if (s == "A" || s == "a") return -1.0;
    if (s == "E" || s == "e" || s == "-inf") {
      return -std::numeric_limits<double>::infinity();
    }
    throw BadConfig("unknown criterion alias '" + s + "'");
  }
  throw BadConfig("criterion p must be a number or one of D/A/E/-inf");
}

}  // namespace

JobConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadConfig("cannot open config " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw BadConfig(std::string("config is not valid JSON: ") + e.what());
  }

  JobConfig config;
  try {
    // model
    const auto& model = doc.at("model");
    const auto& lambda_json = model.at("lambda");
    if (!lambda_json.is_array() || lambda_json.size() < 2) {
      throw BadConfig("model.lambda must list at least two treatments");
    }
    Vector lambda(static_cast<Index>(lambda_json.size()));
    for (std::size_t i = 0; i < lambda_json.size(); ++i) {
      lambda[static_cast<Index>(i)] = lambda_json[i].get<double>();
    }
    const auto& cov = model.at("covariates");
    const std::string cov_type = cov.at("type").get<std::string>();
    Matrix g;
    std::vector<Index> groups;
    if (cov_type == "factorial") {
      std::vector<std::vector<double>> levels;
      for (const auto& dim : cov.at("levels")) {
        levels.push_back(dim.get<std::vector<double>>());
      }
      g = factorial_covariates(levels);
    } else if (cov_type == "onehot") {
      for (const auto& size : cov.at("group_sizes")) groups.push_back(size.get<Index>());
      g = onehot_covariates(groups);
    } else if (cov_type == "explicit") {
      g = parse_matrix(cov.at("g"), "model.covariates.g");
    } else {
      throw BadConfig("unknown covariate builder '" + cov_type + "'");
    }
    config.model = make_model(std::move(lambda), std::move(g));
    config.model.onehot_groups = std::move(groups);

    // interest
    const auto& interest = doc.at("interest");
    Matrix q1;
    const auto& q1_json = interest.at("Q1");
    if (q1_json.is_string()) {
      config.q1_preset = q1_json.get<std::string>();
      if (config.q1_preset == "control") {
        q1 = control_contrasts(config.model.v1);
      } else if (config.q1_preset == "centered") {
        q1 = centering_matrix(config.model.v1);
      } else {
        throw BadConfig("unknown Q1 preset '" + config.q1_preset + "'");
      }
    } else {
      q1 = parse_matrix(q1_json, "interest.Q1");
    }
    Matrix k(config.model.v2, 0);
    const auto& k_json = interest.at("K");
    if (k_json.is_string()) {
      config.k_preset = k_json.get<std::string>();
      if (config.k_preset == "identity") {
        k = Matrix::Identity(config.model.v2, config.model.v2);
      } else if (config.k_preset == "centered-groups") {
        if (config.model.onehot_groups.empty()) {
          throw BadConfig("K preset 'centered-groups' needs one-hot covariates");
        }
        k = Matrix::Zero(config.model.v2, config.model.v2);
        Index offset = 0;
        for (Index size : config.model.onehot_groups) {
          k.block(offset, offset, size, size) = centering_matrix(size);
          offset += size;
        }
      } else if (config.k_preset == "none") {
        // s2 = 0
      } else {
        throw BadConfig("unknown K preset '" + config.k_preset + "'");
      }
    } else {
      k = parse_matrix(k_json, "interest.K");
    }
    config.interest = assemble_interest(config.model, std::move(q1), std::move(k));

    // criterion
    config.criterion.p = parse_p(doc.at("criterion").at("p"));
    config.criterion.s = config.interest.rank_a;

    // constraints
    if (doc.contains("constraints")) {
      for (const auto& row : doc.at("constraints")) {
        const std::string type = row.at("type").get<std::string>();
        if (type == "stratum-uniform") {
          config.stratum_uniform = true;
          const double share = 1.0 / static_cast<double>(config.model.d);
          for (Index kk = 0; kk < config.model.d; ++kk) {
            UserConstraint uc;
            uc.coeffs = Vector::Zero(config.model.grid_size());
            for (Index i = 0; i < config.model.v1; ++i) {
              uc.coeffs[config.model.flat(i, kk)] = 1.0;
            }
            uc.rhs = share;
            config.constraints.push_back(std::move(uc));
          }
        } else if (type == "row") {
          UserConstraint uc;
          const auto& coeffs = row.at("coeffs");
          if (static_cast<Index>(coeffs.size()) != config.model.grid_size()) {
            throw BadConfig("constraint row has wrong length");
          }
          uc.coeffs = Vector(config.model.grid_size());
          for (Index j = 0; j < config.model.grid_size(); ++j) {
            uc.coeffs[j] = coeffs[static_cast<std::size_t>(j)].get<double>();
          }
          uc.rhs = row.at("rhs").get<double>();
          const std::string rel = row.value("relation", "eq");
          if (rel == "eq") uc.relation = UserConstraint::Relation::Eq;
          else if (rel == "le") uc.relation = UserConstraint::Relation::Le;
          else if (rel == "ge") uc.relation = UserConstraint::Relation::Ge;
          else throw BadConfig("unknown constraint relation '" + rel + "'");
          config.constraints.push_back(std::move(uc));
        } else {
          throw BadConfig("unknown constraint type '" + type + "'");
        }
      }
    }

    // sparsify / rounding / figures / seed
    if (doc.contains("sparsify")) {
      config.sparsify_opts.restarts = doc.at("sparsify").value("restarts", 8);
      if (config.sparsify_opts.restarts < 1) throw BadConfig("sparsify.restarts must be >= 1");
    }
    if (doc.contains("rounding")) {
      const auto& rounding = doc.at("rounding");
      if (rounding.contains("n")) {
        for (const auto& n : rounding.at("n")) config.rounding_n.push_back(n.get<long>());
      }
      config.rounding_method = rounding.value("method", "efficient");
      if (config.rounding_method != "efficient" && config.rounding_method != "stratum-argmax") {
        throw BadConfig("unknown rounding method '" + config.rounding_method + "'");
      }
    }
    if (doc.contains("figures")) {
      const auto& figures = doc.at("figures");
      if (figures.contains("fig1")) {
        config.figures.fig1 = true;
        config.figures.fig1_v2_min = figures.at("fig1").value("v2_min", 1);
        config.figures.fig1_v2_max = figures.at("fig1").value("v2_max", 8);
        if (config.figures.fig1_v2_min < 1 ||
            config.figures.fig1_v2_max < config.figures.fig1_v2_min) {
          throw BadConfig("bad fig1 v2 range");
        }
      }
      if (figures.contains("fig2")) {
        config.figures.fig2 = true;
        config.figures.fig2_n_min = figures.at("fig2").value("n_min", 10);
        config.figures.fig2_n_max = figures.at("fig2").value("n_max", 60);
        config.figures.fig2_design = figures.at("fig2").value("design", "");
        if (config.figures.fig2_n_min < 1 ||
            config.figures.fig2_n_max < config.figures.fig2_n_min) {
          throw BadConfig("bad fig2 n range");
        }
      }
    }
    config.seed = doc.value("seed", 0);
  } catch (const json::exception& e) {
    throw BadConfig(std::string("config error: ") + e.what());
  }
  return config;
}

}  // namespace optdes
