#pragma once

// UTF-8 helpers backed by ICU: case folding, decomposition, mark stripping.

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

#include <string>
#include <string_view>

#include "rusnor/error.hpp"

namespace rusnor::text {

inline icu::UnicodeString to_unicode(std::string_view s) {
  return icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

inline std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

/// Decodes UTF-8 into code points. Ill-formed sequences become U+FFFD.
inline std::u32string to_u32(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  while (i < n) {
    UChar32 c;
    U8_NEXT(bytes, i, n, c);
    out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t c) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<uint8_t*>(buf), len, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
  if (!error) out.append(buf, static_cast<std::size_t>(len));
}

inline std::string from_u32(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) append_utf8(out, c);
  return out;
}

inline bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

inline bool is_combining_mark(char32_t c) {
  return u_charType(static_cast<UChar32>(c)) == U_NON_SPACING_MARK;
}

inline bool is_alnum(char32_t c) { return u_isalnum(static_cast<UChar32>(c)); }

inline bool is_latin_letter(char32_t c) {
  UErrorCode status = U_ZERO_ERROR;
  return u_isalpha(static_cast<UChar32>(c)) &&
         uscript_getScript(static_cast<UChar32>(c), &status) == USCRIPT_LATIN;
}

inline std::string trim(std::string_view s) {
  const auto u = to_u32(s);
  std::size_t b = 0, e = u.size();
  while (b < e && is_space(u[b])) ++b;
  while (e > b && is_space(u[e - 1])) --e;
  return from_u32(std::u32string_view(u).substr(b, e - b));
}

/// Full Unicode case folding (ß becomes ss).
inline std::string fold_case(std::string_view s) {
  auto u = to_unicode(s);
  u.foldCase(U_FOLD_CASE_DEFAULT);
  return to_utf8(u);
}

namespace detail {

inline const icu::Normalizer2& normalizer(bool decompose) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = decompose ? icu::Normalizer2::getNFDInstance(status)
                                        : icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw Error(std::string("ICU normalizer unavailable: ") + u_errorName(status));
  }
  return *n;
}

inline icu::UnicodeString normalize(const icu::UnicodeString& s, bool decompose) {
  UErrorCode status = U_ZERO_ERROR;
  auto out = normalizer(decompose).normalize(s, status);
  if (U_FAILURE(status)) throw Error(std::string("normalization failed: ") + u_errorName(status));
  return out;
}

inline void append_without_marks(std::u32string& out, const icu::UnicodeString& decomposed) {
  for (int32_t i = 0; i < decomposed.length();) {
    const UChar32 c = decomposed.char32At(i);
    i += U16_LENGTH(c);
    if (!is_combining_mark(static_cast<char32_t>(c))) out.push_back(static_cast<char32_t>(c));
  }
}

}  // namespace detail

/// Canonical decomposition followed by removal of nonspacing marks.
inline std::string strip_diacritics(std::string_view s) {
  const auto decomposed = detail::normalize(to_unicode(s), true);
  std::u32string out;
  detail::append_without_marks(out, decomposed);
  return from_u32(out);
}

/// Case-folded, diacritic-free form with the Nordic letters folded to ASCII
/// (å -> a, ø -> o, æ -> ae). Whitespace is kept.
inline std::u32string fold_for_comparison(std::string_view s) {
  auto u = to_unicode(s);
  u.foldCase(U_FOLD_CASE_DEFAULT);
  const auto decomposed = detail::normalize(u, true);
  std::u32string stripped;
  detail::append_without_marks(stripped, decomposed);
  std::u32string out;
  out.reserve(stripped.size());
  for (char32_t c : stripped) {
    switch (c) {
      case U'ø': out.push_back(U'o'); break;   // ø
      case U'æ': out.append(U"ae"); break;      // æ
      default: out.push_back(c);
    }
  }
  return out;
}

/// Lookup key for lexicon forms: case-folded and diacritic-free, but å, ø
/// and æ stay distinct letters.
inline std::string fold_for_lookup(std::string_view s) {
  auto u = to_unicode(s);
  u.foldCase(U_FOLD_CASE_DEFAULT);
  const auto composed = detail::normalize(u, false);
  std::u32string out;
  for (int32_t i = 0; i < composed.length();) {
    const UChar32 c = composed.char32At(i);
    i += U16_LENGTH(c);
    if (c == 0x00E5 || c == 0x00F8 || c == 0x00E6) {
      out.push_back(static_cast<char32_t>(c));
      continue;
    }
    detail::append_without_marks(out, detail::normalize(icu::UnicodeString(c), true));
  }
  return from_u32(out);
}

}  // namespace rusnor::text
