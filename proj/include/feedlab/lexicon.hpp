#pragma once

#include <array>
#include <string>
#include <vector>

#include "feedlab/domain.hpp"

namespace feedlab {

// Keyword tables backing the deterministic scoring oracle. Matching is
// case-insensitive substring search. The simulator draws its synthetic
// post texts from these same phrase lists, so oracle classification of
// generated posts recovers the planted labels exactly.
struct Lexicon {
    std::vector<std::string> political;                          // political pre-filter
    std::array<std::vector<std::string>, kFactorCount> factors;  // v1..v8 triggers
    std::vector<std::string> neutral;                            // generator-only filler;
                                                                 // never matches the above

    // Built-in table. A JSON override can be loaded on top of it.
    static const Lexicon& builtin();
    static Lexicon from_json_file(const std::string& path);
    void save_json_file(const std::string& path) const;

    bool matches_political(const std::string& text) const;
    // Factor triggers present in the text, irrespective of political status.
    std::array<bool, kFactorCount> match_factors(const std::string& text) const;
};

// Case-insensitive substring search.
bool contains_icase(const std::string& haystack, const std::string& needle);

} // namespace feedlab
