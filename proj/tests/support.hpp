#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "compskill/composition.hpp"
#include "compskill/rng.hpp"

namespace testing_support {

using compskill::Expr;
using compskill::SkillId;

inline std::filesystem::path fixture_path(std::string_view name) {
  return std::filesystem::path(COMPSKILL_FIXTURE_DIR) / name;
}

inline nlohmann::json transcripts() {
  std::ifstream in(fixture_path("transcripts.json"));
  return nlohmann::json::parse(in);
}

/// interlace_str('vptqj', x) + remove_vowels('xbh')
inline Expr interlace_concat_expr() {
  return Expr::apply(SkillId::concat,
                     {Expr::apply(SkillId::interlace_str, {Expr::constant("vptqj"), Expr::input()}),
                      Expr::apply(SkillId::remove_vowels, {Expr::constant("xbh")})});
}

/// alternate_case(duplicate_every_char(remove_vowels(x)))
inline Expr nested_case_expr() {
  return Expr::apply(
      SkillId::alternate_case,
      {Expr::apply(SkillId::duplicate_every_char, {Expr::apply(SkillId::remove_vowels, {Expr::input()})})});
}

inline std::string random_string(compskill::Rng& rng, std::size_t max_len, std::string_view alphabet) {
  const auto len = static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(max_len)));
  std::string s(len, ' ');
  for (auto& c : s) c = alphabet[rng.index(alphabet.size())];
  return s;
}

inline constexpr std::string_view kLetters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
inline constexpr std::string_view kPrintable =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 \t\n!?.,-_'\"{}[]():;aeiou";

inline std::string temp_dir(std::string_view name) {
  auto dir = std::filesystem::temp_directory_path() / ("compskill_test_" + std::string(name));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace testing_support
