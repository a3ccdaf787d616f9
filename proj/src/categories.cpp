#include "panrec/categories.hpp"

#include "panrec/error.hpp"

namespace panrec {

namespace {

const char* kind_name(CategoryKind k) {
  switch (k) {
    case CategoryKind::Freespace: return "freespace";
    case CategoryKind::Stuff: return "stuff";
    case CategoryKind::Thing: return "thing";
  }
  return "thing";
}

CategoryKind kind_from_name(const std::string& s) {
  if (s == "freespace") return CategoryKind::Freespace;
  if (s == "stuff") return CategoryKind::Stuff;
  if (s == "thing") return CategoryKind::Thing;
  throw InvalidArgument("unknown category kind '" + s + "'");
}

std::vector<Category> base_categories() {
  return {
      {0, "freespace", CategoryKind::Freespace}, {1, "cabinet", CategoryKind::Thing},
      {2, "bed", CategoryKind::Thing},           {3, "chair", CategoryKind::Thing},
      {4, "sofa", CategoryKind::Thing},          {5, "table", CategoryKind::Thing},
      {6, "desk", CategoryKind::Thing},          {7, "dresser", CategoryKind::Thing},
      {8, "lamp", CategoryKind::Thing},          {9, "other", CategoryKind::Thing},
      {10, "wall", CategoryKind::Stuff},         {11, "floor", CategoryKind::Stuff},
  };
}

}  // namespace

CategoryTable::CategoryTable(std::vector<Category> categories)
    : categories_(std::move(categories)) {
  int freespace_count = 0;
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].id != i) throw InvalidArgument("category ids must be contiguous from 0");
    if (categories_[i].kind == CategoryKind::Freespace) {
      ++freespace_count;
      freespace_ = categories_[i].id;
    }
  }
  if (freespace_count != 1) throw InvalidArgument("category table needs exactly one freespace entry");
}

CategoryTable CategoryTable::synthetic() { return CategoryTable(base_categories()); }

CategoryTable CategoryTable::real() {
  auto cats = base_categories();
  cats.push_back({12, "ceiling", CategoryKind::Stuff});
  return CategoryTable(std::move(cats));
}

const Category& CategoryTable::at(CategoryId id) const {
  if (!contains(id)) throw InvalidArgument("unknown category id " + std::to_string(id));
  return categories_[id];
}

CategoryId CategoryTable::id_of(std::string_view name) const {
  for (const auto& c : categories_) {
    if (c.name == name) return c.id;
  }
  throw InvalidArgument("unknown category '" + std::string(name) + "'");
}

std::vector<CategoryId> CategoryTable::things() const {
  std::vector<CategoryId> out;
  for (const auto& c : categories_) {
    if (c.kind == CategoryKind::Thing) out.push_back(c.id);
  }
  return out;
}

std::vector<CategoryId> CategoryTable::stuff() const {
  std::vector<CategoryId> out;
  for (const auto& c : categories_) {
    if (c.kind == CategoryKind::Stuff) out.push_back(c.id);
  }
  return out;
}

nlohmann::json categories_to_json(const CategoryTable& table) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : table.categories()) {
    arr.push_back({{"id", c.id}, {"name", c.name}, {"kind", kind_name(c.kind)}});
  }
  return arr;
}

CategoryTable categories_from_json(const nlohmann::json& j) {
  std::vector<Category> cats;
  for (const auto& e : j) {
    cats.push_back({e.at("id").get<CategoryId>(), e.at("name").get<std::string>(),
                    kind_from_name(e.at("kind").get<std::string>())});
  }
  return CategoryTable(std::move(cats));
}

}  // namespace panrec
