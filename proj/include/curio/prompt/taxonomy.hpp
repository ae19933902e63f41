// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "curio/rng.hpp"

namespace curio::prompt {

inline constexpr std::array<std::string_view, 10> kCategoryNames{
    "Human", "Object", "Animal", "Plant", "Scene", "Food", "Event", "Fictional World", "Text", "UI and Graphic Design"};

struct SubCategory {
  std::string name;
  std::vector<std::string> items;
};

struct Category {
  std::string name;
  std::vector<SubCategory> subcategories;
};

struct Taxonomy {
  std::vector<Category> categories;
  /// Exactly the ten category names, unique sub-category names, unique items per sub-category.
  void validate() const;
  std::size_t item_count() const noexcept;
};

/// {"categories":[{"name":"Human","subcategories":[{"name":"Race","items":["White People"]}]}]}
Taxonomy parse_taxonomy(std::istream& in);
Taxonomy load_taxonomy(const std::filesystem::path& path);

enum class Dimension { Attribute, SpatialRelationship, Count, Interaction, Color };

inline constexpr std::array<Dimension, 5> kAllDimensions{Dimension::Attribute, Dimension::SpatialRelationship,
                                                         Dimension::Count, Dimension::Interaction, Dimension::Color};

std::string_view dimension_name(Dimension d) noexcept;  // "Attribute", "Spatial Relationship", ...
/// Keypoint term used by the prompt-generation template for this dimension.
std::string_view dimension_keypoint(Dimension d) noexcept;  // "attribute", "position", "counting", "relation", "color"

struct ItemRequest {
  std::string category;
  std::string subcategory;
  std::string item;
  std::vector<Dimension> dims;  // 1 to 4 distinct, in draw order
};

/// Uniform item over all items, then a subset size uniform on {1,2,3,4} drawn without replacement.
ItemRequest sample_item_request(const Taxonomy& t, SplitMix64& rng);

}  // namespace curio::prompt
