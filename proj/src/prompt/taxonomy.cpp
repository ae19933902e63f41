// SPDX-License-Identifier: Apache-2.0
#include "curio/prompt/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "curio/errors.hpp"

namespace curio::prompt {

void Taxonomy::validate() const {
  std::set<std::string> names;
  for (const auto& c : categories) {
    if (std::find(kCategoryNames.begin(), kCategoryNames.end(), c.name) == kCategoryNames.end())
      throw DataError("taxonomy: unknown category \"" + c.name + "\"");
    if (!names.insert(c.name).second) throw DataError("taxonomy: duplicate category \"" + c.name + "\"");
    std::set<std::string> subs;
    for (const auto& s : c.subcategories) {
      if (!subs.insert(s.name).second)
        throw DataError("taxonomy: duplicate sub-category \"" + s.name + "\" in \"" + c.name + "\"");
      std::set<std::string> items;
      for (const auto& i : s.items)
        if (!items.insert(i).second) throw DataError("taxonomy: duplicate item \"" + i + "\" in \"" + s.name + "\"");
    }
  }
  if (names.size() != kCategoryNames.size()) throw DataError("taxonomy: all ten categories must be present");
}

std::size_t Taxonomy::item_count() const noexcept {
  std::size_t n = 0;
  for (const auto& c : categories)
    for (const auto& s : c.subcategories) n += s.items.size();
  return n;
}

Taxonomy parse_taxonomy(std::istream& in) {
  Taxonomy t;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& c : j.at("categories")) {
      Category cat{c.at("name").get<std::string>(), {}};
      for (const auto& s : c.value("subcategories", nlohmann::json::array()))
        cat.subcategories.push_back(
            {s.at("name").get<std::string>(), s.value("items", std::vector<std::string>{})});
      t.categories.push_back(std::move(cat));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("taxonomy: ") + e.what());
  }
  t.validate();
  return t;
}

Taxonomy load_taxonomy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open taxonomy " + path.string());
  return parse_taxonomy(in);
}

std::string_view dimension_name(Dimension d) noexcept {
  switch (d) {
    case Dimension::Attribute: return "Attribute";
    case Dimension::SpatialRelationship: return "Spatial Relationship";
    case Dimension::Count: return "Count";
    case Dimension::Interaction: return "Interaction";
    case Dimension::Color: return "Color";
  }
  return "Attribute";
}

std::string_view dimension_keypoint(Dimension d) noexcept {
  switch (d) {
    case Dimension::Attribute: return "attribute";
    case Dimension::SpatialRelationship: return "position";
    case Dimension::Count: return "counting";
    case Dimension::Interaction: return "relation";
    case Dimension::Color: return "color";
  }
  return "attribute";
}

ItemRequest sample_item_request(const Taxonomy& t, SplitMix64& rng) {
  const std::size_t total = t.item_count();
  if (total == 0) throw ContractError("sample_item_request: taxonomy has no items");
  auto req = [&, pick = static_cast<std::size_t>(rng.below(total))]() mutable {
    for (const auto& c : t.categories)
      for (const auto& s : c.subcategories) {
        if (pick < s.items.size()) return ItemRequest{c.name, s.name, s.items[pick], {}};
        pick -= s.items.size();
      }
    throw ContractError("sample_item_request: item index out of range");
  }();
  std::array<Dimension, 5> pool = kAllDimensions;
  const auto k = static_cast<std::size_t>(rng.below(4)) + 1;
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
    req.dims.push_back(pool[i]);
  }
  return req;
}

}  // namespace curio::prompt
