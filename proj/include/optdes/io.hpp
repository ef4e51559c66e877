#pragma once

#include "optdes/common.hpp"
#include "optdes/criteria.hpp"
#include "optdes/model.hpp"
#include "optdes/sparsify.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace optdes {

/// Design table as stored on disk: one line of metadata, a column header
/// (i,k,value) and one row per grid cell, covariate index fastest, indices
/// one-based. Weight values are written with 17 significant digits so the
/// write/read round trip is lossless.
struct DesignTable {
  Index v1 = 0;
  Index d = 0;
  Index v2 = 0;
  bool counts = false;
  Vector values;  // flat, i*d + k
};

void write_design_csv(const std::string& path, const ModelSpec& spec, const Vector& values,
                      bool counts);
DesignTable read_design_csv(const std::string& path);

/// Converts a loaded weight table into a valid ApproxDesign for the model.
/// Published tables are often rounded to a few decimals; totals within 1e-3
/// of one are renormalized (the adjustment is returned through drift).
ApproxDesign to_approx_design(const ModelSpec& spec, const DesignTable& table,
                              double* drift = nullptr);

ExactDesign to_exact_design(const ModelSpec& spec, const DesignTable& table);

struct FigureConfig {
  bool fig1 = false;
  Index fig1_v2_min = 1;
  Index fig1_v2_max = 8;
  bool fig2 = false;
  long fig2_n_min = 10;
  long fig2_n_max = 60;
  std::string fig2_design;  // optional sparse design to use for the second column
};

struct JobConfig {
  ModelSpec model;
  InterestSpec interest;
  CriterionSpec criterion;
  std::vector<UserConstraint> constraints;
  bool stratum_uniform = false;  // one trial share per covariate point
  SparsifyOptions sparsify_opts;
  std::vector<long> rounding_n;
  std::string rounding_method = "efficient";  // or "stratum-argmax"
  FigureConfig figures;
  std::uint64_t seed = 0;

  // presets kept for sweeps that rebuild the model at other sizes
  std::string q1_preset;  // "control", "centered" or "" (explicit)
  std::string k_preset;   // "identity", "centered-groups", "none" or ""
};

/// Parses a job configuration. Throws BadConfig on malformed input.
JobConfig load_config(const std::string& path);

std::string format_full(double value);   // 17 significant digits
std::string format_human(double value);  // 6 significant digits

}  // namespace optdes
