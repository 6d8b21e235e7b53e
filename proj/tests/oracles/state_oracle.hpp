#pragma once

// Replays acts with plain vectors and no shared code with apply_act, so the
// two can be compared field by field.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "dialogen/dialogue.hpp"

namespace oracle {

struct TrackedState {
    std::size_t turn = 0;
    std::vector<std::string> keywords;
    std::vector<std::string> suggested;
    std::vector<std::string> rejected;
    std::vector<std::string> informed;
    std::optional<dialogen::ActType> last_user;
    std::optional<dialogen::ActType> last_system;
    bool terminal = false;
    bool error = false; // the replay hit an illegal act
};

inline void add_unique(std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) {
        v.push_back(s);
    }
}

inline TrackedState replay(const std::vector<dialogen::DialogueAct>& acts) {
    using dialogen::ActType;
    TrackedState st;
    for (std::size_t i = 0; i < acts.size(); ++i) {
        const auto& a = acts[i];
        const bool user_turn = i % 2 == 0;
        const auto t = static_cast<int>(a.type);
        const bool is_user = t <= static_cast<int>(ActType::EndUser);
        if (st.terminal || user_turn != is_user) {
            st.error = true;
            return st;
        }
        switch (a.type) {
        case ActType::ProvideQuery:
            st.keywords = a.keywords;
            break;
        case ActType::RejectSuggestion:
            if (std::find(st.suggested.begin(), st.suggested.end(), *a.symbol) == st.suggested.end()) {
                st.error = true;
                return st;
            }
            add_unique(st.rejected, *a.symbol);
            break;
        case ActType::Suggest:
            add_unique(st.suggested, *a.symbol);
            break;
        case ActType::ListOptions:
            for (const auto& s : a.symbols) {
                add_unique(st.suggested, s);
            }
            break;
        case ActType::Info:
            add_unique(st.informed, *a.symbol);
            break;
        case ActType::Accept:
        case ActType::EndUser:
        case ActType::EndSystem:
            st.terminal = true;
            break;
        default:
            break;
        }
        if (is_user) {
            st.last_user = a.type;
        } else {
            st.last_system = a.type;
            ++st.turn;
        }
    }
    return st;
}

} // namespace oracle
