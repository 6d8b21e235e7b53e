#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dialogen/log.hpp"
#include "options.hpp"

namespace dialogen::cli {

struct Context {
    Settings settings;
    std::ostream& out;
    JsonLogger& log;

    std::filesystem::path workdir() const;
    /// Setting `key` when non-empty, else <workdir>/<fallback>.
    std::filesystem::path path_or(const std::string& key, const std::string& fallback) const;
};

int cmd_ingest(Context& ctx);
int cmd_index(Context& ctx);
int cmd_train(Context& ctx);
int cmd_plan(Context& ctx);
int cmd_realize(Context& ctx);
int cmd_export(Context& ctx);
int cmd_stats(Context& ctx);
int cmd_eval(Context& ctx);
int cmd_pipeline(Context& ctx);

} // namespace dialogen::cli
