#include "hsdid/psdiag.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "hsdid/ols.hpp"

namespace hsdid {

SeparationError::SeparationError(const std::string& column, double value)
    : EstimationError("separation detected: coefficient on '" + column + "' diverges (" +
                      std::to_string(value) + ")"),
      column_(column) {}

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double logistic_log_likelihood(const Eigen::MatrixXd& W, const Eigen::VectorXd& label,
                               const Eigen::VectorXd& theta) {
  const Eigen::VectorXd eta = W * theta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += label[i] * eta[i] - softplus(eta[i]);
  return ll;
}

LogisticFit fit_logistic(const Eigen::MatrixXd& W_all, const Eigen::VectorXd& label,
                         std::vector<std::string> column_names, const LogisticOptions& opts) {
  if (W_all.rows() != label.size()) throw InputError("logistic: label length differs from rows");
  if (static_cast<Eigen::Index>(column_names.size()) != W_all.cols()) {
    throw InputError("logistic: column_names length differs from columns");
  }
  const double positives = label.sum();
  if (positives <= 0.0 || positives >= static_cast<double>(label.size())) {
    throw EstimationError("logistic: both labels must be present");
  }

  LogisticFit fit;
  const auto kept = independent_columns(W_all);
  Eigen::MatrixXd W(W_all.rows(), static_cast<Eigen::Index>(kept.size()));
  for (Eigen::Index j = 0, next = 0; j < W_all.cols(); ++j) {
    if (next < static_cast<Eigen::Index>(kept.size()) && kept[static_cast<std::size_t>(next)] == j) {
      W.col(next) = W_all.col(j);
      fit.column_names.push_back(column_names[static_cast<std::size_t>(j)]);
      ++next;
    } else {
      fit.dropped_columns.push_back(column_names[static_cast<std::size_t>(j)]);
    }
  }

  const Eigen::Index k = W.cols();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(k);
  double ll = logistic_log_likelihood(W, label, theta);
  fit.log_likelihood_trace.push_back(ll);
  std::vector<double> score_trace;

  auto check_separation = [&](const Eigen::VectorXd& th) {
    Eigen::Index j = 0;
    const double m = th.cwiseAbs().maxCoeff(&j);
    if (m > opts.separation_threshold) throw SeparationError(fit.column_names[static_cast<std::size_t>(j)], th[j]);
  };

  for (int it = 0; it <= opts.max_iterations; ++it) {
    const Eigen::VectorXd eta = W * theta;
    Eigen::VectorXd p(eta.size()), v(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      p[i] = sigmoid(eta[i]);
      v[i] = p[i] * (1.0 - p[i]);
    }
    const Eigen::VectorXd score = W.transpose() * (label - p);
    fit.max_abs_score = k > 0 ? score.cwiseAbs().maxCoeff() : 0.0;
    score_trace.push_back(fit.max_abs_score);
    fit.iterations = it;
    if (fit.max_abs_score < opts.tolerance) {
      // A vanishing score with every label predicted exactly is the
      // separated likelihood flattening out, not an interior optimum.
      if ((label - p).cwiseAbs().maxCoeff() < 1e-6) {
        Eigen::Index j = 0;
        theta.cwiseAbs().maxCoeff(&j);
        throw SeparationError(fit.column_names[static_cast<std::size_t>(j)], theta[j]);
      }
      fit.converged = true;
      fit.probabilities = p;
      break;
    }
    if (it == opts.max_iterations) break;

    const Eigen::MatrixXd H = W.transpose() * v.asDiagonal() * W;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    Eigen::VectorXd step = ldlt.solve(score);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      Eigen::Index j = 0;
      theta.cwiseAbs().maxCoeff(&j);
      throw SeparationError(fit.column_names[static_cast<std::size_t>(j)], theta[j]);
    }
    // Near the optimum the gain of a Newton step drops below the rounding
    // noise of the summed log-likelihood; such steps are not ascent failures.
    const double noise = 1e-12 * (1.0 + std::abs(ll));
    double scale = 1.0;
    Eigen::VectorXd candidate = theta + step;
    double ll_new = logistic_log_likelihood(W, label, candidate);
    for (int h = 0; h < 40 && !(ll_new >= ll - noise); ++h) {
      scale *= 0.5;
      candidate = theta + scale * step;
      ll_new = logistic_log_likelihood(W, label, candidate);
    }
    if (!(ll_new >= ll - noise)) {
      // No ascent direction left at machine precision.
      fit.probabilities = p;
      break;
    }
    theta = candidate;
    ll = ll_new;
    fit.log_likelihood_trace.push_back(ll);
    check_separation(theta);
  }

  fit.theta = theta;
  fit.log_likelihood = ll;
  if (!fit.converged) {
    std::ostringstream msg;
    msg << "logistic regression did not converge after " << fit.iterations
        << " iterations; max |score| trace:";
    for (double s : score_trace) msg << ' ' << s;
    throw ConvergenceError(msg.str(), score_trace);
  }
  return fit;
}

int SupportHistogram::bin_of(double p) {
  int b = static_cast<int>(std::floor(p * kBins));
  return std::clamp(b, 0, kBins - 1);
}

SupportHistogram common_support(const LogisticFit& fit, std::span<const Group> groups, int event_time) {
  if (static_cast<Eigen::Index>(groups.size()) != fit.probabilities.size()) {
    throw InputError("common_support: one group label per fitted probability required");
  }
  SupportHistogram h;
  h.event_time = event_time;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const int b = SupportHistogram::bin_of(fit.probabilities[static_cast<Eigen::Index>(i)]);
    (groups[i] == Group::Treat ? h.treat : h.control)[static_cast<std::size_t>(b)]++;
  }
  std::size_t nc = 0, nt = 0, lone_c = 0, lone_t = 0;
  for (int b = 0; b < SupportHistogram::kBins; ++b) {
    const auto c = h.control[static_cast<std::size_t>(b)];
    const auto t = h.treat[static_cast<std::size_t>(b)];
    nc += c;
    nt += t;
    h.no_overlap[static_cast<std::size_t>(b)] = (c == 0) != (t == 0);
    if (t == 0) lone_c += c;
    if (c == 0) lone_t += t;
  }
  h.control_no_overlap_share = nc ? static_cast<double>(lone_c) / static_cast<double>(nc) : 0.0;
  h.treat_no_overlap_share = nt ? static_cast<double>(lone_t) / static_cast<double>(nt) : 0.0;
  return h;
}

SupportAssessment assess_common_support(const MatchedSubsample& ms, int event_time,
                                        const ControlSpec& controls) {
  if (event_time < -2 || event_time > 0) throw InputError("event time must be -2, -1 or 0");
  const auto e = static_cast<std::size_t>(event_time + 2);
  std::vector<int> ys;
  for (const auto& c : ms.candidates) ys.push_back(c.window.event_year());
  const auto years = distinct_sorted(ys);

  std::vector<std::string> names{"intercept"};
  const auto labels = controls.labels();
  names.insert(names.end(), labels.begin(), labels.end());
  for (std::size_t i = 1; i < years.size(); ++i) names.push_back(dummy_label("event_year", std::to_string(years[i])));

  const auto n = static_cast<Eigen::Index>(ms.candidates.size());
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(names.size()));
  Eigen::VectorXd y(n);
  std::vector<Group> groups;
  std::vector<double> ctrl(labels.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& c = ms.candidates[static_cast<std::size_t>(i)];
    W(i, 0) = 1.0;
    fill_controls(ms.data, c.window.rows[e], controls, ctrl);
    Eigen::Index j = 1;
    for (double v : ctrl) W(i, j++) = v;
    for (std::size_t yv = 1; yv < years.size(); ++yv, ++j) W(i, j) = c.window.event_year() == years[yv] ? 1.0 : 0.0;
    y[i] = c.group == Group::Treat ? 1.0 : 0.0;
    groups.push_back(c.group);
  }
  SupportAssessment a;
  a.tenure = ms.tenure;
  a.subgroup = ms.subgroup;
  a.event_time = event_time;
  a.fit = fit_logistic(W, y, names);
  a.histogram = common_support(a.fit, groups, event_time);
  return a;
}

std::string histogram_csv_header() { return "tenure,subgroup,event_time,group,bin_low,bin_high,count\n"; }

std::string histogram_csv_rows(const SupportAssessment& a) {
  std::ostringstream out;
  char buf[128];
  for (Group g : {Group::Control, Group::Treat}) {
    const auto& counts = g == Group::Treat ? a.histogram.treat : a.histogram.control;
    for (int b = 0; b < SupportHistogram::kBins; ++b) {
      std::snprintf(buf, sizeof buf, "%s,%s,%d,%s,%.2f,%.2f,%zu\n", std::string(to_string(a.tenure)).c_str(),
                    std::string(to_string(a.subgroup)).c_str(), a.event_time,
                    std::string(to_string(g)).c_str(), SupportHistogram::bin_low(b),
                    SupportHistogram::bin_high(b), counts[static_cast<std::size_t>(b)]);
      out << buf;
    }
  }
  return out.str();
}

}  // namespace hsdid
