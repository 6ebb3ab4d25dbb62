#include "ccsim/numkernel.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

namespace ccsim {

SpaceLabel::SpaceLabel(std::vector<SiteSpec> sites) : sites_(std::move(sites)) {
  std::unordered_set<int> seen;
  for (const auto& s : sites_) {
    if (s.dim < 1) throw ShapeError("site " + std::to_string(s.id) + " has non-positive dimension");
    if (!seen.insert(s.id).second) throw ShapeError("duplicate site id " + std::to_string(s.id));
  }
  strides_.assign(sites_.size(), 1);
  dimension_ = 1;
  for (std::size_t k = sites_.size(); k-- > 0;) {
    strides_[k] = dimension_;
    dimension_ *= static_cast<std::size_t>(sites_[k].dim);
  }
}

SpaceLabel SpaceLabel::qubits(int n) { return uniform(n, 2); }

SpaceLabel SpaceLabel::uniform(int n, int local_dim) {
  std::vector<SiteSpec> sites;
  sites.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int k = 0; k < n; ++k) sites.push_back({k, local_dim});
  return SpaceLabel(std::move(sites));
}

bool SpaceLabel::contains(int id) const {
  return std::any_of(sites_.begin(), sites_.end(), [id](const SiteSpec& s) { return s.id == id; });
}

std::size_t SpaceLabel::position(int id) const {
  for (std::size_t k = 0; k < sites_.size(); ++k)
    if (sites_[k].id == id) return k;
  throw ShapeError("unknown site id " + std::to_string(id));
}

int SpaceLabel::local_dim(int id) const { return sites_[position(id)].dim; }

std::size_t SpaceLabel::stride(int id) const { return strides_[position(id)]; }

}  // namespace ccsim
