#include "feedlab/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

#include "feedlab/errors.hpp"

namespace feedlab {

bool contains_icase(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return false;
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                          [](char a, char b) {
                              return std::tolower(static_cast<unsigned char>(a)) ==
                                     std::tolower(static_cast<unsigned char>(b));
                          });
    return it != haystack.end();
}

namespace {

Lexicon make_builtin() {
    Lexicon lex;
    lex.political = {
        "senator",        "senate",          "congress",       "the president",
        "governor",       "election",        "ballot",         "voting bill",
        "voter",          "legislation",     "campaign rally", "supreme court",
        "immigration",    "tax bill",        "healthcare law", "white house",
        "democrat",       "republican",      "gun control",    "climate policy",
        "city council",   "school board",    "abortion law",   "border policy",
        "activists march","news tonight",    "breaking news",  "protest downtown",
        "social issue",   "public policy",   "polling",        "primaries",
    };
    // v1: partisan animosity
    lex.factors[0] = {
        "the other party disgusts me",
        "i despise the opposition party",
        "those partisans are despicable",
        "the other side makes me sick",
        "i hate everything their party stands for",
    };
    // v2: support for undemocratic practices
    lex.factors[1] = {
        "shut down their polling stations",
        "ignore the court ruling if it helps us",
        "silence the press when it suits our side",
        "throw out ballots from their counties",
        "our side should overrule the judiciary",
    };
    // v3: support for partisan violence
    lex.factors[2] = {
        "punch a rival canvasser",
        "take up arms against the other camp",
        "intimidate their volunteers until they quit",
        "burn their yard signs and worse",
        "violence is justified to win this fight",
    };
    // v4: support for undemocratic candidates
    lex.factors[3] = {
        "back the nominee even if he ignores the courts",
        "i would reelect him even if he rigged it",
        "support our candidate though he defies the constitution",
        "he can break the rules as long as he wins for us",
    };
    // v5: opposition to bipartisan cooperation
    lex.factors[4] = {
        "never compromise with them",
        "no deals across the aisle",
        "refuse to cosponsor anything with their members",
        "working with the other party is betrayal",
    };
    // v6: social distrust
    lex.factors[5] = {
        "trust no one these days",
        "people will always betray you",
        "nobody can be trusted anymore",
        "everyone is out for themselves",
    };
    // v7: social distance
    lex.factors[6] = {
        "i would never marry one of them",
        "keep those voters away from my family",
        "never befriend anyone who supports them",
        "i moved so my kids avoid their kind",
    };
    // v8: biased evaluation of politicized facts
    lex.factors[7] = {
        "their statistics are pure propaganda",
        "any study favoring them is fake",
        "only our numbers are real",
        "the data is rigged whenever it flatters them",
    };
    lex.neutral = {
        "my cat sleeps most of the afternoon",
        "tried a new pasta recipe and loved it",
        "the sunset over the lake was stunning",
        "finally finished that mystery novel",
        "coffee tastes better on rainy mornings",
        "weekend hike photos are up",
        "learning watercolor painting slowly",
        "the playoff game went to overtime",
        "houseplants are thriving this month",
        "caught a great jazz set last night",
        "baking sourdough again this weekend",
        "new running shoes feel amazing",
    };
    return lex;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

} // namespace

const Lexicon& Lexicon::builtin() {
    static const Lexicon lex = make_builtin();
    return lex;
}

Lexicon Lexicon::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("LexiconLoad", "cannot open " + path);
    Json j = Json::parse(in);
    Lexicon lex;
    j.at("political").get_to(lex.political);
    const auto& f = j.at("factors");
    for (int i = 0; i < kFactorCount; ++i) f.at(kFactorNames[i]).get_to(lex.factors[i]);
    if (j.contains("neutral")) j.at("neutral").get_to(lex.neutral);
    return lex;
}

void Lexicon::save_json_file(const std::string& path) const {
    Json f = Json::object();
    for (int i = 0; i < kFactorCount; ++i) f[kFactorNames[i]] = factors[i];
    Json j = Json{{"political", political}, {"factors", f}, {"neutral", neutral}};
    std::ofstream out(path);
    if (!out) throw Error("LexiconSave", "cannot write " + path);
    out << j.dump(2) << "\n";
}

bool Lexicon::matches_political(const std::string& text) const {
    const std::string low = lower(text);
    for (const auto& kw : political) {
        if (low.find(kw) != std::string::npos) return true;
    }
    return false;
}

std::array<bool, kFactorCount> Lexicon::match_factors(const std::string& text) const {
    const std::string low = lower(text);
    std::array<bool, kFactorCount> out{};
    for (int i = 0; i < kFactorCount; ++i) {
        for (const auto& kw : factors[i]) {
            if (low.find(kw) != std::string::npos) {
                out[i] = true;
                break;
            }
        }
    }
    return out;
}

} // namespace feedlab
