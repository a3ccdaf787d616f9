#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "panrec/types.hpp"

namespace panrec {

enum class CategoryKind { Freespace, Stuff, Thing };

struct Category {
  CategoryId id = 0;
  std::string name;
  CategoryKind kind = CategoryKind::Thing;

  friend bool operator==(const Category&, const Category&) = default;
};

/// Ids are contiguous from 0, so the table size is also the semantic logit
/// width. Exactly one freespace entry exists.
class CategoryTable {
 public:
  CategoryTable() = default;
  explicit CategoryTable(std::vector<Category> categories);

  /// Freespace, 9 things, then wall and floor stuff (12 entries).
  static CategoryTable synthetic();
  /// The synthetic table plus ceiling stuff (13 entries).
  static CategoryTable real();

  std::size_t size() const { return categories_.size(); }
  const std::vector<Category>& categories() const { return categories_; }

  bool contains(CategoryId id) const { return id < categories_.size(); }
  const Category& at(CategoryId id) const;
  CategoryId id_of(std::string_view name) const;

  bool is_thing(CategoryId id) const { return contains(id) && at(id).kind == CategoryKind::Thing; }
  bool is_stuff(CategoryId id) const { return contains(id) && at(id).kind == CategoryKind::Stuff; }
  bool is_freespace(CategoryId id) const {
    return contains(id) && at(id).kind == CategoryKind::Freespace;
  }
  CategoryId freespace() const { return freespace_; }

  std::vector<CategoryId> things() const;
  std::vector<CategoryId> stuff() const;

  friend bool operator==(const CategoryTable&, const CategoryTable&) = default;

 private:
  std::vector<Category> categories_;
  CategoryId freespace_ = 0;
};

nlohmann::json categories_to_json(const CategoryTable& table);
CategoryTable categories_from_json(const nlohmann::json& j);

}  // namespace panrec
