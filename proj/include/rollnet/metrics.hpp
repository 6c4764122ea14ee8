#ifndef ROLLNET_METRICS_HPP
#define ROLLNET_METRICS_HPP

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rollnet/network.hpp"
#include "rollnet/pianoroll.hpp"

namespace rollnet {

struct FrameCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  FrameCounts& operator+=(const FrameCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const FrameCounts&, const FrameCounts&) = default;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Per-frame TP/FP/FN of binary rolls of equal shape (nonzero means on).
std::vector<FrameCounts> frame_counts(const Frames& predicted, const Frames& target);

/// S = predicted-on cells, T = target-on cells; P = |T&S|/|S|, R = |T&S|/|T|,
/// F1 = 2PR/(P+R). Empty S gives P = 0, empty T gives R = 0, P + R = 0 gives
/// F1 = 0.
PrecisionRecall piece_prf(const Frames& predicted, const Frames& target);

/// Sum TP / sum (TP + FP + FN) over every frame of every pair; 1 when the
/// denominator is 0.
double frame_accuracy(std::span<const std::pair<Frames, Frames>> pieces);
double frame_accuracy(const Frames& predicted, const Frames& target);

struct PieceScore {
  std::string source_id;
  PrecisionRecall prf;
  FrameCounts totals;
  std::vector<FrameCounts> frames;
};

struct EvalReport {
  std::vector<PieceScore> pieces;
  double macro_f1 = 0.0;
  double frame_accuracy = 0.0;
};

struct EvalConfig {
  double threshold = 0.9;
};

/// Teacher-forced one-step-ahead evaluation: each true frame is fed in turn
/// and the thresholded prediction is compared with the following true frame.
EvalReport evaluate(const NetworkParams& params, std::span<const PianoRoll> test,
                    const EvalConfig& config = {});

/// Table of "method  accuracy%  F1%" rows.
void write_report_table(std::ostream& out,
                        std::span<const std::pair<std::string, EvalReport>> rows);
void write_piece_breakdown(std::ostream& out, const EvalReport& report);

}  // namespace rollnet

#endif  // ROLLNET_METRICS_HPP
