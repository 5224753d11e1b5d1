#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "semdiag/semdiag.hpp"
#include "semdiag/service.hpp"

namespace {

using Json = nlohmann::json;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw semdiag::Error("cannot write " + path);
  out << content;
}

semdiag::kb::KnowledgeBase load(const std::string& path, const std::string& variant) {
  semdiag::kb::KnowledgeBase kb = semdiag::kb::load_file(path);
  if (!variant.empty()) kb = semdiag::suite::variant(kb, variant);
  return kb;
}

struct DiagnoseArgs {
  std::string kb = "kb/demo.json";
  std::string variant;
  std::string sentence;
  bool interactive = false;
  std::string answers;
  std::string oracle;
  std::string report;
  std::string dump_model;
};

int diagnose(const DiagnoseArgs& a) {
  semdiag::kb::KnowledgeBase kb = load(a.kb, a.variant);
  std::unique_ptr<semdiag::session::UserAgent> agent;
  if (a.interactive)
    agent = std::make_unique<semdiag::session::InteractiveAgent>(std::cin, std::cout);
  else if (!a.answers.empty())
    agent = std::make_unique<semdiag::session::ScriptedAgent>(semdiag::session::ScriptedAgent::from_file(a.answers));
  else
    agent = std::make_unique<semdiag::session::OracleAgent>(semdiag::session::OracleAgent::from_file(a.oracle));

  semdiag::report::Report r = semdiag::session::run_session(a.sentence, kb, *agent);
  std::cout << (a.interactive ? r.conclusion_text() : r.transcript_text());
  std::cout << "\n" << r.faults_text();
  for (const std::string& w : r.warnings) std::cerr << "warning: " << w << "\n";
  if (!a.report.empty()) write_file(a.report, semdiag::report::to_json(r).dump(2) + "\n");
  if (!a.dump_model.empty()) {
    semdiag::strategies::Diagnoser d(kb, a.sentence);
    Json out = {{"trace", semdiag::parse::to_json(d.trace())}};
    if (d.model()) out["model"] = d.model()->to_json();
    write_file(a.dump_model, out.dump(2) + "\n");
  }
  return r.exit_code();
}

int bench(const std::string& kb_path) {
  semdiag::kb::KnowledgeBase kb = semdiag::kb::load_file(kb_path);
  bool all = true;
  std::cout << std::left << std::setw(48) << "Ablated knowledge" << std::setw(80) << "Identified error" << std::setw(7)
            << "ID" << std::setw(11) << "Questions" << "Time\n";
  for (const semdiag::suite::CaseResult& c : semdiag::suite::run_ablation_suite(kb)) {
    const std::string error = c.report.faults.empty() ? "(none)" : c.report.faults.front().description;
    const std::string id = c.report.faults.empty() ? "-" : c.report.faults.front().taxonomy_id;
    std::ostringstream t;
    t << std::fixed << std::setprecision(3) << c.seconds << "s";
    std::cout << std::setw(48) << c.spec.ablated << std::setw(80) << error << std::setw(7) << id << std::setw(11)
              << c.report.question_count() << t.str() << (c.passed ? "" : "  MISMATCH") << "\n";
    all = all && c.passed;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive error diagnosis for a small semantic parser"};
  app.require_subcommand(0, 1);

  bool serve = false;
  int port = 8080;
  std::string serve_kb = "kb/demo.json";
  std::string static_dir;
  app.add_flag("--serve", serve, "Start the HTTP service");
  app.add_option("--port", port, "Port for --serve");
  app.add_option("--kb", serve_kb, "Base knowledge base for --serve");
  app.add_option("--static", static_dir, "Directory served under / with --serve");

  DiagnoseArgs d;
  CLI::App* diag = app.add_subcommand("diagnose", "Run a diagnosis session");
  diag->add_option("--kb", d.kb, "Knowledge base JSON")->capture_default_str();
  diag->add_option("--variant", d.variant, "Named demo variant to derive from the knowledge base");
  diag->add_option("--sentence", d.sentence, "Sentence to diagnose")->required();
  auto* mode = diag->add_option_group("mode");
  mode->add_flag("--interactive", d.interactive, "Ask questions on the console");
  mode->add_option("--answers", d.answers, "File with one scripted answer per line");
  mode->add_option("--oracle", d.oracle, "Gold interpretation JSON");
  mode->require_option(1);
  diag->add_option("--report", d.report, "Write the JSON report here");
  diag->add_option("--dump-model", d.dump_model, "Write the trace and initial model JSON here");

  std::string ablate_kb, ablate_out;
  std::vector<std::string> edits;
  CLI::App* abl = app.add_subcommand("ablate", "Remove knowledge from a knowledge base");
  abl->add_option("--kb", ablate_kb, "Knowledge base JSON")->required();
  abl->add_option("--edit", edits, "remove_semtrans:<root>:<concept> | remove_valence_patterns:<root>:<concept> | "
                                   "remove_lexicon_entry:<surface>")
      ->required();
  abl->add_option("--out", ablate_out, "Output path")->required();

  std::string suite_name = "table2", bench_kb = "kb/demo.json";
  CLI::App* ben = app.add_subcommand("bench", "Run the synthetic ablation suite");
  ben->add_option("--suite", suite_name, "Suite name")->check(CLI::IsMember({"table2"}));
  ben->add_option("--kb", bench_kb, "Knowledge base JSON")->capture_default_str();

  std::string parse_kb = "kb/demo.json", parse_variant, parse_sentence;
  CLI::App* par = app.add_subcommand("parse", "Print the parse trace as JSON");
  par->add_option("--kb", parse_kb, "Knowledge base JSON")->capture_default_str();
  par->add_option("--variant", parse_variant, "Named demo variant");
  par->add_option("--sentence", parse_sentence, "Sentence")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve) {
      semdiag::service::Options opts;
      opts.static_dir = static_dir;
      semdiag::service::Service svc(semdiag::kb::load_file(serve_kb), opts);
      httplib::Server server;
      svc.mount(server);
      std::cerr << "listening on port " << port << "\n";
      return server.listen("0.0.0.0", port) ? 0 : 2;
    }
    if (*diag) return diagnose(d);
    if (*abl) {
      semdiag::kb::KnowledgeBase kb = semdiag::kb::load_file(ablate_kb);
      for (const std::string& e : edits) kb = semdiag::kb::ablate(kb, semdiag::kb::parse_edit(e));
      write_file(ablate_out, semdiag::kb::to_json(kb).dump(2) + "\n");
      return 0;
    }
    if (*ben) return bench(bench_kb);
    if (*par) {
      semdiag::parse::ParseTrace t = semdiag::parse::parse(parse_sentence, load(parse_kb, parse_variant));
      std::cout << semdiag::parse::to_json(t).dump(2) << "\n";
      return 0;
    }
    std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
