#pragma once

#include <map>
#include <string>

#include "keyrep/image.h"

namespace keyrep {

using ClassId = int;
using ClassNames = std::map<ClassId, std::string>;

inline constexpr const char* kUnlabelled = "unlabelled";

// Per-pixel ground-truth class ids plus the id -> name table. Ids without a
// table entry resolve to "unlabelled".
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(Raster<int> ids, ClassNames names = {});

  int width() const noexcept { return ids_.width(); }
  int height() const noexcept { return ids_.height(); }
  ImageSize size() const noexcept { return ids_.size(); }

  ClassId operator()(int x, int y) const noexcept { return ids_(x, y); }
  const Raster<int>& ids() const noexcept { return ids_; }
  const ClassNames& names() const noexcept { return names_; }
  void set_names(ClassNames names) { names_ = std::move(names); }
  std::string name_of(ClassId id) const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  Raster<int> ids_;
  ClassNames names_;
};

}  // namespace keyrep
