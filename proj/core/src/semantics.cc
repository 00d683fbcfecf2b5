#include "keyrep/semantics.h"

#include <algorithm>
#include <cmath>

#include "keyrep/error.h"

namespace keyrep {

ClassId class_of(const Keypoint& kp, const LabelMap& labels) {
  const int x = std::clamp(static_cast<int>(std::lround(kp.x)), 0, labels.width() - 1);
  const int y = std::clamp(static_cast<int>(std::lround(kp.y)), 0, labels.height() - 1);
  return labels(x, y);
}

std::optional<double> ClassStats::repeatability() const {
  if (n_d1 == 0) return std::nullopt;
  return static_cast<double>(n_matches) / static_cast<double>(n_d1);
}

void ClassReport::add(ClassId id, const ClassStats& stats) {
  ClassStats& s = classes_[id];
  s.n_d1 += stats.n_d1;
  s.n_matches += stats.n_matches;
}

void ClassReport::add_denominator(std::size_t n) { denominator_ = denominator_.value_or(0) + n; }

void ClassReport::merge(const ClassReport& other) {
  for (const auto& [id, stats] : other.classes_) add(id, stats);
  if (other.denominator_) add_denominator(*other.denominator_);
  for (const auto& [id, name] : other.names_) names_.emplace(id, name);
}

void ClassReport::set_names(const ClassNames& names) { names_ = names; }

std::string ClassReport::name_of(ClassId id) const {
  const auto it = names_.find(id);
  return it == names_.end() ? std::string(kUnlabelled) : it->second;
}

std::size_t ClassReport::total_d1() const {
  std::size_t n = 0;
  for (const auto& [id, s] : classes_) n += s.n_d1;
  return n;
}

std::size_t ClassReport::total_matches() const {
  std::size_t n = 0;
  for (const auto& [id, s] : classes_) n += s.n_matches;
  return n;
}

std::optional<double> ClassReport::overall_repeatability() const {
  const std::size_t den = denominator_ ? *denominator_ : total_d1();
  if (den == 0) return std::nullopt;
  return static_cast<double>(total_matches()) / static_cast<double>(den);
}

std::vector<ClassRow> ClassReport::rows() const {
  std::vector<ClassRow> out;
  for (const auto& [id, s] : classes_) out.push_back({id, name_of(id), s});
  return out;
}

namespace {

std::vector<ClassRow> ranked(std::vector<ClassRow> rows, std::size_t k, bool best_first) {
  std::erase_if(rows, [](const ClassRow& r) { return !r.stats.repeatability(); });
  std::stable_sort(rows.begin(), rows.end(), [best_first](const ClassRow& a, const ClassRow& b) {
    const double ra = *a.stats.repeatability();
    const double rb = *b.stats.repeatability();
    return best_first ? ra > rb : ra < rb;
  });
  if (rows.size() > k) rows.resize(k);
  return rows;
}

}  // namespace

std::vector<ClassRow> ClassReport::top(std::size_t k) const {
  return ranked(rows(), k, true);
}

std::vector<ClassRow> ClassReport::bottom(std::size_t k) const {
  return ranked(rows(), k, false);
}

ClassReport per_class_repeatability(const PairResult& pair, const KeypointSet& kps1,
                                    const LabelMap& labels1) {
  if (labels1.size() != ImageSize{kps1.width, kps1.height}) {
    throw ParameterError("label map does not match the keypoint image size");
  }
  ClassReport report;
  report.set_names(labels1.names());
  report.add_denominator(std::min(pair.n_d1(), pair.n_d2()));
  std::map<int, ClassId> class_of_index;
  for (int i : pair.d1) {
    const ClassId id = class_of(kps1[i], labels1);
    class_of_index[i] = id;
    report.add(id, {1, 0});
  }
  for (const Match& m : pair.matches) {
    const auto it = class_of_index.find(m.index1);
    const ClassId id = it != class_of_index.end() ? it->second
                                                  : class_of(kps1[m.index1], labels1);
    report.add(id, {0, 1});
  }
  return report;
}

}  // namespace keyrep
