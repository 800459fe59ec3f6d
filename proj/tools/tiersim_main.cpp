// Command-line front end: generate traces from workload specs, replay them
// against a storage configuration, compare configurations side by side, and
// show the per-object priority assignment derived from a query plan.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tiersim/sim.hpp"

namespace fs = std::filesystem;
using namespace tiersim;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open \"" + path.string() + "\" for writing");
    out << content;
    if (!out)
        throw std::runtime_error("write to \"" + path.string() + "\" failed");
}

struct TraceInput {
    std::vector<TraceRecord> trace;
    std::map<std::string, RandomAccessSummary> plans;
};

TraceInput resolve_trace(const std::string& trace_path, const std::string& spec_path,
                         std::uint64_t seed) {
    TraceInput in;
    if (!spec_path.empty()) {
        WorkloadSpec spec = load_workload_spec(spec_path);
        in.trace = generate_trace(spec, seed);
        validate_trace_extents(in.trace, spec.objects);
        in.plans = plan_summaries(spec);
    } else {
        in.trace = load_trace(trace_path);
    }
    return in;
}

int cmd_generate(const std::string& spec_path, std::uint64_t seed, const std::string& out_path) {
    WorkloadSpec spec = load_workload_spec(spec_path);
    auto trace = generate_trace(spec, seed);
    validate_trace_extents(trace, spec.objects);
    save_trace(trace, out_path);

    std::map<RequestClass, std::uint64_t> blocks;
    for (const auto& r : trace)
        blocks[r.cls] += r.blocks;
    std::cout << "wrote " << trace.size() << " records to " << out_path << "\n";
    for (const auto& [cls, records] : class_record_totals(trace))
        std::cout << "  " << std::left << std::setw(18) << to_string(cls) << " records "
                  << std::setw(10) << records << " blocks " << blocks[cls] << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& trace_path,
            const std::string& spec_path, std::uint64_t seed, const std::string& out_dir,
            const std::string& format, bool dump_actions, bool dump_classified) {
    StorageConfig config = load_storage_config(config_path);
    TraceInput in = resolve_trace(trace_path, spec_path, seed);

    std::vector<ActionRecord> actions;
    SimReport report = run(config, in.trace, in.plans, dump_actions ? &actions : nullptr);

    fs::create_directories(out_dir);
    if (format == "json" || format == "both")
        write_file(fs::path(out_dir) / "report.json", report_to_json(report).dump(2) + "\n");
    if (format == "csv" || format == "both")
        write_file(fs::path(out_dir) / "report.csv", comparison_to_csv({{report}}));
    if (dump_actions) {
        std::ostringstream os;
        for (const auto& a : actions)
            os << action_record_to_json(a).dump() << '\n';
        write_file(fs::path(out_dir) / "actions.jsonl", os.str());
    }
    if (dump_classified) {
        auto classified = classify_trace(in.trace, in.plans, config.policy);
        save_trace(classified, (fs::path(out_dir) / "classified_trace.jsonl").string());
    }

    std::cout << to_string(report.mode) << ": " << in.trace.size() << " records, "
              << report.totals().accessed_blocks << " blocks, hit ratio "
              << report.totals().hit_ratio() << ", simulated time "
              << report.total_simulated_time_us / 1e6 << " s\n";
    return 0;
}

int cmd_compare(const std::string& config_path, const std::vector<std::string>& modes,
                const std::string& trace_path, const std::string& spec_path, std::uint64_t seed,
                const std::string& out_dir) {
    StorageConfig base = load_storage_config(config_path);
    TraceInput in = resolve_trace(trace_path, spec_path, seed);

    std::vector<StorageConfig> configs;
    for (const auto& m : modes) {
        StorageConfig c = base;
        c.mode = storage_mode_from_string(m);
        configs.push_back(c);
    }
    ComparisonReport cr = compare(configs, in.trace, in.plans);

    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "compare.json", comparison_to_json(cr).dump(2) + "\n");
    write_file(fs::path(out_dir) / "compare.csv", comparison_to_csv(cr));

    for (const auto& r : cr.runs)
        std::cout << std::left << std::setw(10) << to_string(r.mode) << " time "
                  << std::setw(14) << r.total_simulated_time_us / 1e6 << " s  hit ratio "
                  << r.totals().hit_ratio() << "\n";
    return 0;
}

int cmd_classify(const std::string& plan_path, const std::string& config_path) {
    PriorityPolicy policy;
    if (!config_path.empty())
        policy = load_storage_config(config_path).policy;
    policy.validate();

    std::ifstream in(plan_path);
    if (!in)
        throw std::runtime_error("cannot open plan \"" + plan_path + "\"");
    json j;
    in >> j;
    QueryPlanTree tree = plan_from_json(j, "q");
    auto levels = compute_levels(tree);
    auto summary = random_access_summary(tree, levels);

    ConcurrencyRegistry registry;
    registry.register_query(tree.query_id, summary);

    std::cout << "levels: l_low " << summary.l_low << ", l_high " << summary.l_high
              << "  priority range [" << policy.random_lowest << ", " << policy.random_highest
              << "]\n";
    for (const auto& [oid, level] : summary.per_object_min_level) {
        Priority p = classify_request(RequestClass::random_read, oid, registry, policy);
        std::cout << std::left << std::setw(12) << oid << " random      level " << level
                  << "  priority " << p.value() << "\n";
    }
    // Sequentially scanned objects keep the non-caching, non-eviction priority.
    std::map<std::string, bool> seq_objects;
    detail::for_each_operator(tree.root, [&](const PlanOperator& op) {
        if (op.access_pattern == AccessPattern::sequential && op.accessed_object)
            seq_objects[*op.accessed_object] = true;
    });
    for (const auto& [oid, _] : seq_objects) {
        Priority p = classify_request(RequestClass::sequential_read, oid, registry, policy);
        std::cout << std::left << std::setw(12) << oid << " sequential  priority " << p.value()
                  << " (non-caching)\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-level hybrid storage simulator with plan-driven I/O classification"};
    app.require_subcommand(1);

    std::string spec_path, trace_path, config_path, plan_path, out_path;
    std::string format = "json";
    std::uint64_t seed = 42;
    bool dump_actions = false;
    bool dump_classified = false;
    std::vector<std::string> modes = {"hdd_only", "ssd_only", "lru", "hstorage"};

    auto* gen = app.add_subcommand("generate", "Expand a workload spec into a trace file");
    gen->add_option("--spec", spec_path, "workload spec (JSON)")->required();
    gen->add_option("--seed", seed, "random seed");
    gen->add_option("--out", out_path, "output trace path (JSON lines)")->required();

    auto* runc = app.add_subcommand("run", "Replay a trace or spec against one configuration");
    runc->add_option("--config", config_path, "storage config (JSON)")->required();
    auto* run_trace = runc->add_option("--trace", trace_path, "trace file to replay");
    auto* run_spec = runc->add_option("--spec", spec_path, "workload spec to generate and replay");
    run_trace->excludes(run_spec);
    run_spec->excludes(run_trace);
    runc->add_option("--seed", seed, "random seed (spec input only)");
    runc->add_option("--out", out_path, "output directory")->required();
    runc->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"json", "csv", "both"}));
    runc->add_flag("--actions", dump_actions, "also write the cache action log (JSON lines)");
    runc->add_flag("--classified", dump_classified,
                   "also write the trace with per-record priorities");

    auto* cmp = app.add_subcommand("compare", "Run several storage modes on the same trace");
    cmp->add_option("--config", config_path, "base storage config (JSON)")->required();
    cmp->add_option("--modes", modes, "modes to compare")->delimiter(',');
    auto* cmp_trace = cmp->add_option("--trace", trace_path, "trace file to replay");
    auto* cmp_spec = cmp->add_option("--spec", spec_path, "workload spec to generate and replay");
    cmp_trace->excludes(cmp_spec);
    cmp_spec->excludes(cmp_trace);
    cmp->add_option("--seed", seed, "random seed (spec input only)");
    cmp->add_option("--out", out_path, "output directory")->required();

    auto* cls = app.add_subcommand("classify", "Show per-object priorities for a query plan");
    cls->add_option("--plan", plan_path, "query plan (JSON)")->required();
    cls->add_option("--config", config_path, "storage config supplying the policy");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_generate(spec_path, seed, out_path);
        if (runc->parsed()) {
            if (trace_path.empty() && spec_path.empty())
                throw std::runtime_error("run: provide exactly one of --trace or --spec");
            return cmd_run(config_path, trace_path, spec_path, seed, out_path, format,
                           dump_actions, dump_classified);
        }
        if (cmp->parsed()) {
            if (trace_path.empty() && spec_path.empty())
                throw std::runtime_error("compare: provide exactly one of --trace or --spec");
            return cmd_compare(config_path, modes, trace_path, spec_path, seed, out_path);
        }
        if (cls->parsed())
            return cmd_classify(plan_path, config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
