#include "rollnet/metrics.hpp"

#include <cstdio>

#include "rollnet/errors.hpp"

namespace rollnet {
namespace {

void require_same_shape(const Frames& a, const Frames& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch("rolls differ in shape: " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
}

FrameCounts sum(const std::vector<FrameCounts>& frames) {
  FrameCounts total;
  for (const FrameCounts& f : frames) total += f;
  return total;
}

PrecisionRecall prf_from(const FrameCounts& c) {
  PrecisionRecall out;
  const std::int64_t predicted = c.tp + c.fp;
  const std::int64_t actual = c.tp + c.fn;
  out.precision = predicted > 0 ? double(c.tp) / double(predicted) : 0.0;
  out.recall = actual > 0 ? double(c.tp) / double(actual) : 0.0;
  const double denom = out.precision + out.recall;
  out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

double accuracy_from(const FrameCounts& c) {
  const std::int64_t denom = c.tp + c.fp + c.fn;
  return denom > 0 ? double(c.tp) / double(denom) : 1.0;
}

}  // namespace

std::vector<FrameCounts> frame_counts(const Frames& predicted, const Frames& target) {
  require_same_shape(predicted, target);
  std::vector<FrameCounts> out(predicted.rows());
  for (Eigen::Index t = 0; t < predicted.rows(); ++t) {
    FrameCounts& c = out[t];
    for (Eigen::Index p = 0; p < predicted.cols(); ++p) {
      const bool on = predicted(t, p) != 0.0;
      const bool truth = target(t, p) != 0.0;
      c.tp += on && truth;
      c.fp += on && !truth;
      c.fn += !on && truth;
    }
  }
  return out;
}

PrecisionRecall piece_prf(const Frames& predicted, const Frames& target) {
  return prf_from(sum(frame_counts(predicted, target)));
}

double frame_accuracy(std::span<const std::pair<Frames, Frames>> pieces) {
  FrameCounts total;
  for (const auto& [predicted, target] : pieces) total += sum(frame_counts(predicted, target));
  return accuracy_from(total);
}

double frame_accuracy(const Frames& predicted, const Frames& target) {
  return accuracy_from(sum(frame_counts(predicted, target)));
}

EvalReport evaluate(const NetworkParams& params, std::span<const PianoRoll> test,
                    const EvalConfig& config) {
  if (test.empty()) throw EmptyCorpus("evaluation needs at least one test piece");
  EvalReport report;
  FrameCounts corpus_total;
  double f1_sum = 0.0;
  for (const PianoRoll& roll : test) {
    const SupervisedSequence seq = to_supervised(roll);
    const Frames probabilities = forward_sequence(params, seq.inputs).predictions();
    const Frames predicted = (probabilities.array() > config.threshold).cast<double>();

    PieceScore score;
    score.source_id = roll.source_id;
    score.frames = frame_counts(predicted, seq.targets);
    score.totals = sum(score.frames);
    score.prf = prf_from(score.totals);
    corpus_total += score.totals;
    f1_sum += score.prf.f1;
    report.pieces.push_back(std::move(score));
  }
  report.macro_f1 = f1_sum / static_cast<double>(report.pieces.size());
  report.frame_accuracy = accuracy_from(corpus_total);
  return report;
}

void write_report_table(std::ostream& out,
                        std::span<const std::pair<std::string, EvalReport>> rows) {
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %10s %10s\n", "", "Accuracy", "F1 score");
  out << line;
  for (const auto& [method, report] : rows) {
    std::snprintf(line, sizeof line, "%-12s %9.2f%% %9.2f%%\n", method.c_str(),
                  100.0 * report.frame_accuracy, 100.0 * report.macro_f1);
    out << line;
  }
}

void write_piece_breakdown(std::ostream& out, const EvalReport& report) {
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %9s %9s %9s %7s %7s %7s\n", "piece", "precision",
                "recall", "f1", "tp", "fp", "fn");
  out << line;
  for (const PieceScore& p : report.pieces) {
    std::snprintf(line, sizeof line, "%-24s %9.4f %9.4f %9.4f %7lld %7lld %7lld\n",
                  p.source_id.c_str(), p.prf.precision, p.prf.recall, p.prf.f1,
                  static_cast<long long>(p.totals.tp), static_cast<long long>(p.totals.fp),
                  static_cast<long long>(p.totals.fn));
    out << line;
  }
}

}  // namespace rollnet
