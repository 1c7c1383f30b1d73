// agrotelem: simulate the garden/compost telemetry pipeline, serve the mock
// platform, run the ANOVA engine and export recorded series.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "agrotelem/platform_http.hpp"
#include "agrotelem/platform_service.hpp"
#include "agrotelem/simulation.hpp"
#include "agrotelem/stats_anova.hpp"

using namespace agrotelem;

namespace {

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& report_path, bool json_out) {
  SimulationConfig cfg;
  if (!config_path.empty()) {
    cfg = load_simulation_config(config_path);
  } else if (const char* env = std::getenv("AGROTELEM_CONFIG"); env && *env) {
    cfg = load_simulation_config(env);
  } else {
    cfg = default_simulation_config();
  }
  if (seed) override_seeds(cfg, *seed);
  if (!report_path.empty()) cfg.report_path = report_path;

  const auto started = std::chrono::steady_clock::now();
  const auto result = run_simulation(cfg);
  const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();
  if (json_out) {
    std::cout << result.report.to_json() << '\n';
  } else {
    std::cout << result.report.to_text();
    std::cout << "  wall clock          " << wall_ms << " ms\n";
  }
  return result.report.exit_code();
}

int cmd_serve(const std::string& host, int port, const std::string& snapshot) {
  PlatformService service;
  if (!snapshot.empty() && std::filesystem::exists(snapshot)) {
    service.load_snapshot_json(read_file(snapshot));
  }
  PlatformServer server(service);
  const int bound = server.bind(host, port);
  if (bound < 0) {
    std::cerr << "error: cannot bind " << host << ":" << port << '\n';
    return kDomainError;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&] {
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  });
  std::cout << "platform listening on http://" << host << ":" << bound << std::endl;
  server.listen_after_bind();
  g_stop = true;
  watcher.join();
  if (!snapshot.empty()) {
    std::ofstream out(snapshot, std::ios::binary);
    out << service.snapshot_json() << '\n';
  }
  return kOk;
}

int cmd_stats(const std::string& csv_path, const std::vector<std::string>& summaries, bool json_out) {
  using namespace agrotelem::stats;
  std::vector<NamedStats> columns;
  AnovaTable table;
  if (!summaries.empty()) {
    std::vector<GroupSummary> groups;
    for (const auto& s : summaries) groups.push_back(parse_summary(s));
    table = anova_from_summary(groups);
    auto column = [](std::string name, const GroupSummary& g) {
      DescriptiveStats d;
      d.n = g.n;
      d.mean = g.mean;
      d.sd = g.sd;
      if (g.mean != 0.0) d.cv = 100.0 * g.sd / g.mean;
      return NamedStats{std::move(name), d, false};
    };
    for (std::size_t i = 0; i < groups.size(); ++i) {
      columns.push_back(column("Group " + std::to_string(i + 1), groups[i]));
    }
    columns.push_back(column("Sample", pooled_summary(groups)));
  } else {
    const auto groups = parse_scores_csv(read_file(csv_path));
    std::vector<std::vector<double>> raw;
    std::vector<double> all;
    for (const auto& g : groups) {
      columns.push_back({g.name, describe(g.scores), true});
      raw.push_back(g.scores);
      all.insert(all.end(), g.scores.begin(), g.scores.end());
    }
    columns.push_back({"Sample", describe(all), true});
    table = anova_from_raw(raw);
  }

  if (json_out) {
    std::cout << anova_to_json(table) << '\n';
  } else {
    std::cout << format_descriptive_table(columns) << '\n' << format_anova_table(table);
  }
  return kOk;
}

int cmd_export(const std::string& url, const std::string& snapshot, int station,
               const std::string& kind_text, std::int64_t from, std::int64_t to) {
  const auto kind = parse_kind(kind_text);
  if (!kind) {
    std::cerr << "error: unknown kind '" << kind_text << "'\n";
    return kDomainError;
  }
  if (station < 1 || station > 255) {
    std::cerr << "error: station must be in 1..255\n";
    return kDomainError;
  }
  const std::string path = "/api/v1/series/" + std::to_string(station) + "/" + kind_text +
                           "/export.csv?from=" + std::to_string(from) + "&to=" + std::to_string(to);
  std::unique_ptr<PlatformService> local;
  std::unique_ptr<PlatformClient> client;
  if (!snapshot.empty()) {
    local = std::make_unique<PlatformService>();
    local->load_snapshot_json(read_file(snapshot));
    client = std::make_unique<InProcessClient>(*local);
  } else {
    client = std::make_unique<HttpPlatformClient>(url);
  }
  const auto res = client->get(path);
  if (res.status != 200) {
    std::cerr << "error: platform returned " << res.status << ": " << res.body << '\n';
    return kDomainError;
  }
  std::cout << res.body;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Garden/compost telemetry pipeline and statistics tools"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Run an end-to-end simulation");
  std::string config_path, report_path;
  std::optional<std::uint64_t> seed;
  bool sim_json = false;
  simulate->add_option("--config", config_path, "Simulation JSON config (default: $AGROTELEM_CONFIG)");
  simulate->add_option("--seed", seed, "Override channel and sensor seeds");
  simulate->add_option("--report", report_path, "Write the JSON report here");
  simulate->add_flag("--json", sim_json, "Print the JSON report instead of the text summary");

  auto* serve = app.add_subcommand("serve", "Serve the mock IoT platform over HTTP");
  int port = 8080;
  std::string host = "127.0.0.1", serve_snapshot;
  serve->add_option("--port", port, "TCP port (0 picks a free one)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--snapshot", serve_snapshot, "Load on start, save on shutdown");

  auto* stats_cmd = app.add_subcommand("stats", "Descriptive statistics and one-way ANOVA");
  std::string csv_path;
  std::vector<std::string> summaries;
  bool stats_json = false;
  auto* csv_opt = stats_cmd->add_option("csv", csv_path, "CSV with header group,score");
  auto* sum_opt = stats_cmd->add_option("--summary", summaries, "Group summary n,mean,sd (repeatable)")
                      ->expected(1, -1);
  csv_opt->excludes(sum_opt);
  stats_cmd->add_flag("--json", stats_json, "Print the ANOVA table as JSON");

  auto* export_cmd = app.add_subcommand("export", "Export one series as CSV");
  std::string url = "http://127.0.0.1:8080", export_snapshot, kind_text;
  int station = 0;
  std::int64_t from = 0, to = std::numeric_limits<std::int64_t>::max();
  export_cmd->add_option("--url", url, "Platform base URL");
  export_cmd->add_option("--snapshot", export_snapshot, "Read a platform snapshot file instead");
  export_cmd->add_option("station", station, "Station id")->required();
  export_cmd->add_option("kind", kind_text, "Factor kind, e.g. GardenLuminosity")->required();
  export_cmd->add_option("from", from, "From (epoch seconds, inclusive)");
  export_cmd->add_option("to", to, "To (epoch seconds, inclusive)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*simulate) return cmd_simulate(config_path, seed, report_path, sim_json);
    if (*serve) return cmd_serve(host, port, serve_snapshot);
    if (*stats_cmd) {
      if (csv_path.empty() && summaries.empty()) {
        std::cerr << "error: stats needs a CSV path or --summary\n";
        return kUsageError;
      }
      return cmd_stats(csv_path, summaries, stats_json);
    }
    if (*export_cmd) return cmd_export(url, export_snapshot, station, kind_text, from, to);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kDomainError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomainError;
  }
  return kUsageError;
}
