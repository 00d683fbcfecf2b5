#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "keyrep/keypoint.h"
#include "keyrep/labels.h"
#include "keyrep/matching.h"

namespace keyrep {

// Nearest-pixel label lookup (round, then clamp to the raster).
ClassId class_of(const Keypoint& kp, const LabelMap& labels);

struct ClassStats {
  std::size_t n_d1 = 0;
  std::size_t n_matches = 0;

  std::optional<double> repeatability() const;
  friend bool operator==(const ClassStats&, const ClassStats&) = default;
};

struct ClassRow {
  ClassId id = 0;
  std::string name;
  ClassStats stats;
};

// Class-conditional counts accumulated over one or many pairs. Merging sums
// counts, so repeatability is micro-averaged across pairs.
class ClassReport {
 public:
  void add(ClassId id, const ClassStats& stats);
  void merge(const ClassReport& other);
  void set_names(const ClassNames& names);

  const std::map<ClassId, ClassStats>& classes() const noexcept { return classes_; }
  std::string name_of(ClassId id) const;

  std::size_t total_d1() const;
  std::size_t total_matches() const;
  // Adds min(|d1|, |d2|) of a contributing pair.
  void add_denominator(std::size_t n);
  // Sum of matches over the summed pair denominators, which reproduces the
  // pair repeatability for a single pair. Reports built from add() alone
  // fall back to total_d1.
  std::optional<double> overall_repeatability() const;

  // Rows in id order.
  std::vector<ClassRow> rows() const;
  // Classes with defined repeatability, best first (ties by id).
  std::vector<ClassRow> top(std::size_t k) const;
  // Classes with defined repeatability, worst first (ties by id).
  std::vector<ClassRow> bottom(std::size_t k) const;

  bool empty() const noexcept { return classes_.empty(); }

 private:
  std::map<ClassId, ClassStats> classes_;
  ClassNames names_;
  std::optional<std::size_t> denominator_;
};

// Bins d1 by the image-1 class of each keypoint, and each match by the class
// of its image-1 keypoint.
ClassReport per_class_repeatability(const PairResult& pair, const KeypointSet& kps1,
                                    const LabelMap& labels1);

}  // namespace keyrep
