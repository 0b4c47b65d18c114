#include "limsup/dimension.hpp"

#include <algorithm>
#include <cmath>

#include "limsup/rng.hpp"

namespace limsup {

DimReport box_dimension(const CubeTree& tree, const CubeSet& F, std::vector<int> levels) {
  if (F.empty()) throw UndefinedDimension("box dimension of the empty set is undefined");
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  if (levels.size() < 3) throw std::invalid_argument("box_dimension needs at least 3 levels");
  for (int l : levels) {
    if (l < 0 || l > F.level())
      throw std::invalid_argument("box_dimension levels must lie within [0, F.level]");
  }

  std::vector<uint64_t> counts;
  counts.reserve(levels.size());
  for (int l : levels) counts.push_back(F.ancestors_at(tree, l).size());

  // drop levels saturated at the full cube count unless too few remain
  std::vector<int> used;
  std::vector<uint64_t> used_counts;
  for (size_t i = 0; i < levels.size(); ++i) {
    if (counts[i] == tree.cube_count(levels[i])) continue;
    used.push_back(levels[i]);
    used_counts.push_back(counts[i]);
  }
  if (used.size() < 3) {
    used = levels;
    used_counts = counts;
  }

  const double log_inv_b = std::log(1.0 / tree.b());
  std::vector<double> xs, ys;
  for (size_t i = 0; i < used.size(); ++i) {
    xs.push_back(used[i] * log_inv_b);
    ys.push_back(std::log(static_cast<double>(used_counts[i])));
  }
  const LinFit fit = linear_fit(xs, ys);

  DimReport rep;
  rep.slope = fit.slope;
  rep.stderr_ = fit.stderr_slope;
  rep.r2 = fit.r2;
  rep.levels = std::move(used);
  rep.counts = std::move(used_counts);
  return rep;
}

IsometryMap IsometryMap::torus_translate(std::vector<int64_t> offsets) {
  IsometryMap m;
  m.kind = Kind::TorusTranslate;
  m.cell_offsets = std::move(offsets);
  return m;
}

IsometryMap IsometryMap::digit_permute(std::vector<std::vector<uint8_t>> perms) {
  IsometryMap m;
  m.kind = Kind::DigitPermute;
  m.level_perms = std::move(perms);
  return m;
}

namespace {

void validate_permutation(const std::vector<uint8_t>& perm, int m) {
  if (static_cast<int>(perm.size()) != m) throw InvalidMap("permutation arity mismatch");
  std::vector<bool> seen(m, false);
  for (uint8_t v : perm) {
    if (v >= m || seen[v]) throw InvalidMap("not a bijection on the digit alphabet");
    seen[v] = true;
  }
}

}  // namespace

CubeSet apply_map(const CubeTree& tree, const CubeSet& F, const IsometryMap& map) {
  const int L = F.level();
  if (map.kind == IsometryMap::Kind::TorusTranslate) {
    if (tree.space().kind != SpaceKind::Torus)
      throw InvalidMap("torus translation on a non-torus space");
    if (map.cell_offsets.size() != static_cast<size_t>(tree.space().d))
      throw InvalidMap("translation offsets must match the dimension");
    const uint64_t cells = [&] {
      uint64_t acc = 1;
      for (int i = 0; i < L; ++i) acc *= static_cast<uint64_t>(std::lround(1.0 / tree.b()));
      return acc;
    }();
    std::vector<uint64_t> out;
    out.reserve(F.size());
    for (uint64_t p : F.paths()) {
      auto idx = tree.torus_indices({L, p});
      for (size_t d = 0; d < idx.size(); ++d) {
        const int64_t shifted =
            (static_cast<int64_t>(idx[d]) + map.cell_offsets[d]) % static_cast<int64_t>(cells);
        idx[d] = static_cast<uint64_t>(shifted < 0 ? shifted + static_cast<int64_t>(cells)
                                                   : shifted);
      }
      out.push_back(tree.torus_id_from_indices(L, idx).path);
    }
    return CubeSet(L, std::move(out));
  }

  // digit permutations: symbolic (or cantor) alphabets, one permutation per level
  const auto kind = tree.space().kind;
  if (kind != SpaceKind::Symbolic && kind != SpaceKind::Cantor3)
    throw InvalidMap("digit permutation needs a digit space");
  const int m = (kind == SpaceKind::Cantor3) ? 2 : tree.space().m;
  if (map.level_perms.size() < static_cast<size_t>(L))
    throw InvalidMap("needs one permutation per level");
  for (const auto& perm : map.level_perms) validate_permutation(perm, m);
  std::vector<uint64_t> out;
  out.reserve(F.size());
  for (uint64_t p : F.paths()) {
    auto digits = tree.digits_of({L, p});
    for (int l = 0; l < L; ++l) digits[l] = map.level_perms[l][digits[l]];
    out.push_back(tree.id_from_digits(L, digits).path);
  }
  return CubeSet(L, std::move(out));
}

IsometryMap random_map(const CubeTree& tree, int level, uint64_t seed) {
  RngStream rng(key_chain(seed, TAG_MAPS));
  if (tree.space().kind == SpaceKind::Torus) {
    uint64_t cells = 1;
    const int q = static_cast<int>(std::lround(1.0 / tree.b()));
    for (int i = 0; i < level; ++i) cells *= static_cast<uint64_t>(q);
    std::vector<int64_t> offs(tree.space().d);
    for (auto& o : offs) o = static_cast<int64_t>(rng.next_below(cells));
    return IsometryMap::torus_translate(std::move(offs));
  }
  const int m = (tree.space().kind == SpaceKind::Cantor3) ? 2 : tree.space().m;
  std::vector<std::vector<uint8_t>> perms(level);
  for (auto& perm : perms) {
    perm.resize(m);
    for (int i = 0; i < m; ++i) perm[i] = static_cast<uint8_t>(i);
    for (int i = m - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.next_below(static_cast<uint64_t>(i + 1))]);
  }
  return IsometryMap::digit_permute(std::move(perms));
}

IntersectionLabResult intersection_lab(const CubeTree& tree, const CubeSet& F,
                                       const std::vector<IsometryMap>& maps,
                                       std::vector<int> levels, double t_ref, double tol) {
  IntersectionLabResult res;
  res.t_ref = t_ref;
  res.tol = tol;
  res.all_pass = true;
  CubeSet current = F;
  for (size_t k = 0; k <= maps.size(); ++k) {
    if (k > 0) current = current.set_intersect(apply_map(tree, F, maps[k - 1]));
    IntersectionLabRow row;
    row.k = static_cast<int>(k);
    if (current.empty()) {
      row.empty = true;
      row.pass = false;
      res.all_pass = false;
      res.rows.push_back(std::move(row));
      break;  // further prefixes stay empty
    }
    row.report = box_dimension(tree, current, levels);
    row.pass = row.report.slope >= t_ref - tol;
    if (!row.pass) res.all_pass = false;
    res.rows.push_back(std::move(row));
  }
  return res;
}

}  // namespace limsup
