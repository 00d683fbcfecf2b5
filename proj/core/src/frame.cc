#include "keyrep/frame.h"

#include "keyrep/error.h"

namespace keyrep {

LabelMap::LabelMap(Raster<int> ids, ClassNames names)
    : ids_(std::move(ids)), names_(std::move(names)) {}

std::string LabelMap::name_of(ClassId id) const {
  const auto it = names_.find(id);
  return it == names_.end() ? std::string(kUnlabelled) : it->second;
}

void FrameBundle::validate() const {
  if (image.empty()) throw ParameterError("frame '" + frame_id + "' has no image");
  if (depth && depth->size() != image.size()) {
    throw ParameterError("frame '" + frame_id + "': depth shape differs from image");
  }
  if (labels && labels->size() != image.size()) {
    throw ParameterError("frame '" + frame_id + "': label shape differs from image");
  }
}

}  // namespace keyrep
