#include "ivjump/smilepca.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ivjump/error.hpp"

namespace ivjump {

namespace {

void normalize_column_signs(Eigen::MatrixXd& loadings, Eigen::MatrixXd* rotation) {
  for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
    Eigen::Index arg = 0;
    loadings.col(j).cwiseAbs().maxCoeff(&arg);
    if (loadings(arg, j) < 0.0) {
      loadings.col(j) *= -1.0;
      if (rotation != nullptr) rotation->col(j) *= -1.0;
    }
  }
}

}  // namespace

void SmileSeries::add_day(Date day) {
  days.push_back(day);
  samples.emplace_back();
}

DeltaIvPanel delta_panel(const SmileSeries& smiles, double scale) {
  DeltaIvPanel panel;
  panel.days = smiles.days;
  std::vector<SmileBins> rows;
  for (std::size_t d = 0; d < smiles.days.size(); ++d) {
    const auto& day = smiles.samples[d];
    int first = -1;
    int last = -1;
    for (int s = 0; s < kSessionLength; ++s) {
      if (day[static_cast<std::size_t>(s)]) {
        if (first < 0) first = s;
        last = s;
      }
    }
    if (first < 0) continue;
    for (int s = first + 1; s <= last; ++s) {
      const auto& prev = day[static_cast<std::size_t>(s - 1)];
      const auto& cur = day[static_cast<std::size_t>(s)];
      if (!prev || !cur) {
        ++panel.dropped;
        continue;
      }
      SmileBins diff{};
      for (std::size_t b = 0; b < kBins; ++b) diff[b] = scale * ((*cur)[b] - (*prev)[b]);
      rows.push_back(diff);
      panel.keys.push_back({d, s});
    }
  }
  panel.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kBins));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t b = 0; b < kBins; ++b) {
      panel.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) = rows[r][b];
    }
  }
  return panel;
}

KeyedSeries atm_column(const DeltaIvPanel& panel) {
  KeyedSeries out;
  out.days = panel.days;
  out.keys = panel.keys;
  out.values = 0.5 * (panel.values.col(static_cast<Eigen::Index>(kAtmBins[0])) +
                      panel.values.col(static_cast<Eigen::Index>(kAtmBins[1])));
  return out;
}

KeyedSeries deseasonalize(const KeyedSeries& series, const std::set<Date>& no_jump_days) {
  const Eigen::Index cols = series.values.cols();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(kSessionLength, cols);
  std::vector<std::size_t> counts(kSessionLength, 0);
  std::vector<bool> reference(series.days.size());
  for (std::size_t d = 0; d < series.days.size(); ++d) reference[d] = no_jump_days.contains(series.days[d]);

  for (std::size_t r = 0; r < series.keys.size(); ++r) {
    const auto& key = series.keys[r];
    if (!reference[key.day]) continue;
    sums.row(key.slot) += series.values.row(static_cast<Eigen::Index>(r));
    ++counts[static_cast<std::size_t>(key.slot)];
  }
  KeyedSeries out = series;
  for (std::size_t r = 0; r < series.keys.size(); ++r) {
    const int slot = series.keys[r].slot;
    const auto n = counts[static_cast<std::size_t>(slot)];
    if (n == 0) {
      throw Error(ErrorCode::EmptyReferenceMinute,
                  "no no-jump observations at " + format_minute(minute_of(slot)));
    }
    out.values.row(static_cast<Eigen::Index>(r)) -= sums.row(slot) / static_cast<double>(n);
  }
  return out;
}

ScoreSeries deseasonalize(const ScoreSeries& series, const std::set<Date>& no_jump_days) {
  ScoreSeries out;
  static_cast<KeyedSeries&>(out) = deseasonalize(static_cast<const KeyedSeries&>(series), no_jump_days);
  out.deseasonalized = true;
  return out;
}

std::string_view to_string(ComponentLabel label) {
  switch (label) {
    case ComponentLabel::AtmPc: return "ATM-PC";
    case ComponentLabel::OtmCallPc: return "OTM-Call-PC";
    case ComponentLabel::OtmPutPc: return "OTM-Put-PC";
    case ComponentLabel::Ambiguous: return "ambiguous";
  }
  return "?";
}

PcaModel pca_fit(const KeyedSeries& panel, int components) {
  const Eigen::Index n = panel.values.rows();
  const Eigen::Index p = panel.values.cols();
  if (n < 50) throw Error(ErrorCode::InsufficientData, std::to_string(n) + " rows, need >= 50");
  if (components < 1 || components > p) throw Error(ErrorCode::ConfigInvalid, "bad component count");
  if (!panel.values.allFinite()) throw Error(ErrorCode::InsufficientData, "panel has missing values");

  PcaModel model;
  model.column_means = panel.values.colwise().mean();
  const Eigen::MatrixXd centered = panel.values.rowwise() - model.column_means;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::RankDeficient, "eigen-decomposition failed");
  model.eigenvalues = eig.eigenvalues().reverse();
  const double trace = cov.trace();
  const double tiny = 1e-12 * std::max(trace, std::numeric_limits<double>::min());
  if (!(model.eigenvalues(components - 1) > tiny)) {
    throw Error(ErrorCode::RankDeficient, "covariance rank below " + std::to_string(components));
  }
  model.loadings = eig.eigenvectors().rowwise().reverse().leftCols(components);
  normalize_column_signs(model.loadings, nullptr);
  model.explained = model.eigenvalues.head(components) / trace;
  model.rotation = Eigen::MatrixXd::Identity(components, components);
  return model;
}

double varimax_criterion(const Eigen::MatrixXd& loadings) {
  const double p = static_cast<double>(loadings.rows());
  double total = 0.0;
  for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
    const Eigen::ArrayXd sq = loadings.col(j).array().square();
    const double mean = sq.sum() / p;
    total += sq.square().sum() / p - mean * mean;
  }
  return total;
}

PcaModel varimax_rotate(const PcaModel& model, const VarimaxOptions& options) {
  const Eigen::Index p = model.loadings.rows();
  const Eigen::Index k = model.loadings.cols();

  Eigen::VectorXd row_norm = Eigen::VectorXd::Ones(p);
  if (options.kaiser_normalize) {
    row_norm = model.loadings.rowwise().norm();
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!(row_norm(i) > 0.0)) row_norm(i) = 1.0;
    }
  }
  Eigen::MatrixXd b = row_norm.asDiagonal().inverse() * model.loadings;
  Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(k, k);

  Eigen::MatrixXd best_b = b;
  Eigen::MatrixXd best_rot = rot;
  double best = varimax_criterion(b);
  bool converged = false;
  const double np = static_cast<double>(p);

  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    for (Eigen::Index c1 = 0; c1 < k - 1; ++c1) {
      for (Eigen::Index c2 = c1 + 1; c2 < k; ++c2) {
        const Eigen::ArrayXd x = b.col(c1).array();
        const Eigen::ArrayXd y = b.col(c2).array();
        const Eigen::ArrayXd u = x.square() - y.square();
        const Eigen::ArrayXd v = 2.0 * x * y;
        const double a_sum = u.sum();
        const double b_sum = v.sum();
        const double c_sum = (u.square() - v.square()).sum();
        const double d_sum = 2.0 * (u * v).sum();
        const double num = d_sum - 2.0 * a_sum * b_sum / np;
        const double den = c_sum - (a_sum * a_sum - b_sum * b_sum) / np;
        const double theta = 0.25 * std::atan2(num, den);
        const double cs = std::cos(theta);
        const double sn = std::sin(theta);
        const Eigen::VectorXd bx = b.col(c1);
        const Eigen::VectorXd by = b.col(c2);
        b.col(c1) = cs * bx + sn * by;
        b.col(c2) = -sn * bx + cs * by;
        const Eigen::VectorXd rx = rot.col(c1);
        const Eigen::VectorXd ry = rot.col(c2);
        rot.col(c1) = cs * rx + sn * ry;
        rot.col(c2) = -sn * rx + cs * ry;
      }
    }
    const double crit = varimax_criterion(b);
    const double gain = crit - best;
    if (crit >= best) {
      best = crit;
      best_b = b;
      best_rot = rot;
    }
    if (gain < options.tolerance) {
      converged = true;
      break;
    }
  }

  PcaModel out = model;
  out.loadings = row_norm.asDiagonal() * best_b;
  out.rotation = best_rot;
  out.rotated = true;
  out.converged = converged;
  normalize_column_signs(out.loadings, &out.rotation);

  // Rotated component variances: diag(R' diag(lambda) R) over the trace.
  const Eigen::VectorXd lambda = model.eigenvalues.head(k);
  const double trace = model.eigenvalues.sum();
  out.explained.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    out.explained(j) = (out.rotation.col(j).array().square() * lambda.array()).sum() / trace;
  }
  return out;
}

ComponentLabel region_of_bin(std::size_t bin) {
  const double m = bin_center(bin);
  if (m < 0.95) return ComponentLabel::OtmPutPc;
  if (m > 1.05) return ComponentLabel::OtmCallPc;
  return ComponentLabel::AtmPc;
}

LabeledScores project_and_label(const PcaModel& model, const KeyedSeries& panel) {
  if (panel.values.cols() != model.loadings.rows()) {
    throw Error(ErrorCode::SchemaMismatch, "panel columns do not match loadings");
  }
  LabeledScores out;
  out.scores.days = panel.days;
  out.scores.keys = panel.keys;
  out.scores.values = panel.values * model.loadings;

  const Eigen::Index k = std::min<Eigen::Index>(model.loadings.cols(), 3);
  std::array<ComponentLabel, 3> picked{ComponentLabel::Ambiguous, ComponentLabel::Ambiguous,
                                       ComponentLabel::Ambiguous};
  for (Eigen::Index j = 0; j < k; ++j) {
    std::map<ComponentLabel, double> mass;
    for (Eigen::Index i = 0; i < model.loadings.rows(); ++i) {
      mass[region_of_bin(static_cast<std::size_t>(i))] += model.loadings(i, j) * model.loadings(i, j);
    }
    picked[static_cast<std::size_t>(j)] =
        std::max_element(mass.begin(), mass.end(),
                         [](const auto& a, const auto& b) { return a.second < b.second; })
            ->first;
  }
  out.labels = picked;
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < k; ++i) {
      if (i != j && picked[static_cast<std::size_t>(i)] == picked[static_cast<std::size_t>(j)]) {
        out.labels[static_cast<std::size_t>(j)] = ComponentLabel::Ambiguous;
        out.ambiguous = true;
      }
    }
  }
  return out;
}

void require_unambiguous(const std::array<ComponentLabel, 3>& labels) {
  for (const auto l : labels) {
    if (l == ComponentLabel::Ambiguous) {
      throw Error(ErrorCode::AmbiguousLabel, "two components map to the same moneyness region");
    }
  }
}

void write_loadings(std::ostream& out, Maturity maturity, const PcaModel& model, bool header) {
  if (header) out << "maturity,component,bin_lo,loading\n";
  for (Eigen::Index j = 0; j < model.loadings.cols(); ++j) {
    for (Eigen::Index i = 0; i < model.loadings.rows(); ++i) {
      out << to_string(maturity) << ",pc" << (j + 1) << ',' << format_real(bin_low(static_cast<std::size_t>(i)))
          << ',' << format_real(model.loadings(i, j)) << '\n';
    }
  }
}

void write_scores(std::ostream& out, const ScoreSeries& scores) {
  out << "day,minute,pc1,pc2,pc3\n";
  for (std::size_t r = 0; r < scores.keys.size(); ++r) {
    const auto& key = scores.keys[r];
    out << scores.days[key.day].str() << ',' << format_minute(minute_of(key.slot));
    for (Eigen::Index j = 0; j < scores.values.cols(); ++j) {
      out << ',' << format_real(scores.values(static_cast<Eigen::Index>(r), j));
    }
    out << '\n';
  }
}

}  // namespace ivjump
