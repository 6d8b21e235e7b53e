#include "cli.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>

#include "commands.hpp"
#include "dialogen/error.hpp"

namespace dialogen::cli {

namespace {

const std::map<std::string, std::pair<std::string, int (*)(Context&)>>& command_table() {
    static const std::map<std::string, std::pair<std::string, int (*)(Context&)>> table{
        {"ingest", {"Validate a knowledge base and copy it into the workdir", cmd_ingest}},
        {"index", {"Build the TF-IDF index and write index.json", cmd_index}},
        {"train", {"Train the dialogue manager by self-play", cmd_train}},
        {"plan", {"Plan a batch of dialogue-act scripts", cmd_plan}},
        {"realize", {"Realize scripts into dialogues through a chat endpoint", cmd_realize}},
        {"export", {"Export the corpus as fine-tuning JSONL", cmd_export}},
        {"stats", {"Corpus statistics", cmd_stats}},
        {"eval", {"Compare a candidate corpus against a reference corpus", cmd_eval}},
        {"pipeline", {"Run a whole phase: ingest, train, plan, realize, export, stats", cmd_pipeline}},
    };
    return table;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message,
                  const std::string& command) {
    nlohmann::ordered_json j;
    j["error"] = {{"kind", kind}, {"message", message}, {"command", command}};
    err << j.dump() << '\n';
}

struct Bound {
    const OptionSpec* spec;
    CLI::Option* option;
    std::string text;
    bool flag = false;
};

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dialogue corpus generator: plan dialogue-act scripts, realize them through a chat model, "
                 "export fine-tuning data"};
    app.name("dialogen");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    // Bound values must outlive parsing; one slot per (subcommand, key).
    std::map<std::string, std::vector<std::unique_ptr<Bound>>> bound;
    std::map<std::string, std::string> config_paths;
    std::map<std::string, CLI::App*> apps;

    for (const auto& name : subcommands()) {
        const auto& [description, _] = command_table().at(name);
        auto* sub = app.add_subcommand(name, description);
        apps[name] = sub;
        sub->add_option("--config", config_paths[name], "JSON configuration file (flags override it)")->type_name("FILE");
        for (const auto* spec : options_for(name)) {
            auto b = std::make_unique<Bound>();
            b->spec = spec;
            const auto& flag = spec->flags.at(name);
            const auto help = spec->help + " [config: " + spec->key + ", default: " + spec->default_value.dump() + "]";
            if (spec->type == ValueType::boolean) {
                b->option = sub->add_flag(flag, b->flag, help);
            } else {
                b->option = sub->add_option(flag, b->text, help);
                b->option->type_name(spec->type == ValueType::integer  ? "INT"
                                     : spec->type == ValueType::number ? "FLOAT"
                                                                       : "TEXT");
                if (flag.rfind("--", 0) != 0) {
                    b->option->required();
                }
            }
            bound[name].push_back(std::move(b));
        }
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        std::string command;
        for (const auto* sub : app.get_subcommands()) {
            command = sub->get_name();
        }
        report_error(err, "usage", e.what(), command);
        return 2;
    }

    const auto* chosen = app.get_subcommands().front();
    const auto name = chosen->get_name();
    try {
        Settings settings;
        if (const auto& path = config_paths[name]; !path.empty()) {
            std::ifstream in(path);
            if (!in) {
                throw ConfigError("cannot read config file " + path);
            }
            const auto doc = nlohmann::json::parse(in, nullptr, false);
            if (doc.is_discarded()) {
                throw ConfigError(path + " is not valid JSON");
            }
            settings.merge_config(doc, path);
        }
        for (const auto& b : bound[name]) {
            if (b->option->count() == 0) {
                continue;
            }
            settings.set(b->spec->key,
                         b->spec->type == ValueType::boolean ? nlohmann::json(b->flag) : parse_value(*b->spec, b->text));
        }

        const std::filesystem::path workdir = settings.text("paths.workdir");
        std::filesystem::create_directories(workdir);
        const auto log_setting = settings.text("paths.log");
        JsonLogger log(log_setting.empty() ? workdir / "logs.jsonl" : std::filesystem::path(log_setting));
        Context ctx{settings, out, log};
        log.log("command_start", {{"command", name}});
        const int status = command_table().at(name).second(ctx);
        log.log("command_end", {{"command", name}, {"status", status}});
        return status;
    } catch (const Error& e) {
        report_error(err, e.kind(), e.what(), name);
    } catch (const std::filesystem::filesystem_error& e) {
        report_error(err, "io", e.what(), name);
    } catch (const std::exception& e) {
        report_error(err, "internal", e.what(), name);
    }
    return 1;
}

} // namespace dialogen::cli
