#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dialogen/dialogue.hpp"
#include "dialogen/kb.hpp"

#ifndef DIALOGEN_SOURCE_DIR
#define DIALOGEN_SOURCE_DIR "."
#endif

namespace fixtures {

inline std::filesystem::path source_dir() { return DIALOGEN_SOURCE_DIR; }
inline std::filesystem::path kb20_path() { return source_dir() / "data" / "allegro_sample.jsonl"; }
inline std::filesystem::path kb10_path() { return source_dir() / "tests" / "fixtures" / "kb10.jsonl"; }
inline std::filesystem::path prompt_path() { return source_dir() / "prompts" / "realizer.txt"; }

inline dialogen::KnowledgeBase kb20() { return dialogen::ingest(kb20_path()); }
inline dialogen::KnowledgeBase kb10() { return dialogen::ingest(kb10_path()); }

/// d1 "draw bitmap", d2 "load bitmap file"; index it without names.
inline dialogen::KnowledgeBase two_doc() {
    return dialogen::KnowledgeBase({
        {"d1", dialogen::SymbolKind::function, "", "draw bitmap", ""},
        {"d2", dialogen::SymbolKind::function, "", "load bitmap file", ""},
    });
}

inline dialogen::KnowledgeBase three_symbols() {
    return dialogen::KnowledgeBase({
        {"alpha_fn", dialogen::SymbolKind::function, "", "draw a filled circle", ""},
        {"beta_fn", dialogen::SymbolKind::function, "", "load a sound sample", ""},
        {"gamma_fn", dialogen::SymbolKind::function, "", "rotate a bitmap image", ""},
    });
}

/// The four-act opening of the worked example, optionally closed with
/// Accept so it forms a valid script.
inline dialogen::Script fig2_script(bool closed = true) {
    using dialogen::ActType;
    using dialogen::DialogueAct;
    dialogen::Script s;
    s.goal_symbol = "al_fixasin";
    s.seed = 7;
    s.acts = {DialogueAct::provide_query({"distinct", "5000", "holes", "fixasin"}),
              DialogueAct::with_symbol(ActType::Suggest, "al_fixasin"),
              DialogueAct::with_symbol(ActType::ElicitInfo, "al_fixasin"),
              DialogueAct::with_symbol(ActType::Info, "al_fixasin")};
    if (closed) {
        s.acts.push_back(DialogueAct::with_symbol(ActType::Accept, "al_fixasin"));
        s.success = true;
    }
    return s;
}

} // namespace fixtures
