#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fairsumm/app.hpp"
#include "fairsumm/corpus.hpp"
#include "fairsumm/error.hpp"
#include "fairsumm/harness.hpp"
#include "fairsumm/metrics.hpp"
#include "fairsumm/quality.hpp"
#include "fairsumm/stats.hpp"

namespace py = pybind11;
using namespace fairsumm;

namespace {

py::dict rouge_dict(const quality::RougeScore& s) {
  py::dict d;
  d["precision"] = s.precision;
  d["recall"] = s.recall;
  d["f1"] = s.f1;
  d["degenerate"] = s.degenerate;
  return d;
}

class PyJudge final : public harness::TextGenerator {
 public:
  explicit PyJudge(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
  std::string generate(const std::string& prompt, const harness::GenerationParams&) override { return fn_(prompt); }

 private:
  std::function<std::string(const std::string&)> fn_;
};

harness::TemplateId template_of(const std::string& name) {
  const auto t = harness::parse_template(name);
  if (!t) throw InvalidArgument("unknown template '" + name + "'");
  return *t;
}

}  // namespace

PYBIND11_MODULE(_fairsumm, m) {
  m.doc() = "Fairness and quality metrics for multi-document news summaries";

  py::register_exception<Error>(m, "Error");
  // Registered later, so tried first: argument and validation errors surface as ValueError.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidArgument& e) {
      py::set_error(PyExc_ValueError, e.what());
    } catch (const ValidationError& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  m.def("wasserstein_1d",
        [](const std::array<double, 3>& p, const std::array<double, 3>& q) {
          return metrics::wasserstein_1d(Distribution3(p), Distribution3(q));
        },
        py::arg("p"), py::arg("q"));
  m.def("entity_coverage", &metrics::entity_coverage, py::arg("source_keys"), py::arg("summary_keys"));

  m.def("rouge_n",
        [](const std::string& c, const std::string& r, int n) { return rouge_dict(quality::rouge_n(c, r, n)); },
        py::arg("candidate"), py::arg("reference"), py::arg("n") = 1);
  m.def("rouge_l", [](const std::string& c, const std::string& r) { return rouge_dict(quality::rouge_l(c, r)); },
        py::arg("candidate"), py::arg("reference"));

  m.def("welch_t",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          const auto r = stats::welch_t({"a", a}, {"b", b});
          py::dict d;
          d["t"] = r.t;
          d["df"] = r.df;
          d["p"] = r.p;
          d["d"] = r.d;
          return d;
        },
        py::arg("a"), py::arg("b"));

  m.def("anova3",
        [](const std::vector<std::tuple<std::string, std::string, std::string, double>>& rows) {
          std::vector<stats::Observation> obs;
          for (const auto& [f, s, p, v] : rows) obs.push_back({f, s, p, v});
          const auto t = stats::anova3(obs);
          py::list out;
          for (const auto& r : t.rows) {
            py::dict d;
            d["effect"] = r.effect;
            d["ss"] = r.ss;
            d["df"] = r.df;
            d["f"] = r.f_infinite ? py::float_(INFINITY) : py::float_(r.f);
            d["eta_sq"] = r.eta_sq;
            d["p"] = r.p;
            out.append(d);
          }
          py::dict res;
          res["rows"] = out;
          res["ss_error"] = t.ss_error;
          res["df_error"] = t.df_error;
          res["ss_total"] = t.ss_total;
          return res;
        },
        py::arg("observations"), "Rows of (family, size, position, value).");

  m.def("cluster_jsonl",
        [](const std::string& articles_jsonl, int window, double threshold) {
          std::istringstream in(articles_jsonl);
          const auto read = corpus::read_articles(in);
          corpus::CorpusConfig cfg;
          cfg.time_window_days = window;
          cfg.similarity_threshold = threshold;
          cfg.validate();
          const auto events = corpus::cluster_articles(read.articles, cfg);
          std::ostringstream out;
          corpus::write_events(out, events);
          return out.str();
        },
        py::arg("articles_jsonl"), py::arg("time_window_days") = 3, py::arg("similarity_threshold") = 0.3);

  m.def("render_prompt",
        [](const std::string& tmpl, const std::vector<std::string>& bodies,
           const std::vector<std::string>& publishers, const std::vector<std::string>& leanings) {
          std::vector<harness::PromptArticle> arts;
          for (std::size_t i = 0; i < bodies.size(); ++i) {
            harness::PromptArticle a{bodies[i], i < publishers.size() ? publishers[i] : "", std::nullopt};
            if (i < leanings.size()) {
              a.leaning = parse_leaning(leanings[i]);
              if (!a.leaning) throw InvalidArgument("unknown leaning '" + leanings[i] + "'");
            }
            arts.push_back(std::move(a));
          }
          return harness::render_prompt(template_of(tmpl), arts);
        },
        py::arg("template"), py::arg("bodies"), py::arg("publishers") = std::vector<std::string>{},
        py::arg("leanings") = std::vector<std::string>{});

  m.def("parse_verdict", [](const std::string& r) { return std::string(harness::slot_name(harness::parse_verdict(r))); },
        py::arg("response"));

  m.def("tournament",
        [](const std::vector<std::pair<std::string, std::string>>& candidates, const std::string& source,
           std::function<std::string(const std::string&)> judge, std::uint64_t seed, bool both_orders) {
          std::vector<harness::Candidate> cands;
          for (const auto& [id, text] : candidates) cands.push_back({id, text});
          PyJudge j(std::move(judge));
          harness::TournamentOptions opt;
          opt.both_orders = both_orders;
          const auto r = harness::tournament(cands, source, j, seed, opt);
          py::dict d;
          d["winner"] = r.winner ? py::object(py::str(*r.winner)) : py::object(py::none());
          d["vote_counts"] = r.vote_counts;
          d["discarded"] = r.discarded;
          return d;
        },
        py::arg("candidates"), py::arg("source"), py::arg("judge"), py::arg("seed") = 0,
        py::arg("both_orders") = false, "The judge is called with the rendered prompt and returns its response.");

  m.def("run_command",
        [](const std::string& name, const std::string& config, bool stub_annotators, bool stub_generator,
           std::optional<std::uint64_t> seed, const std::string& input, bool resume) {
          app::CommandOptions o;
          o.config = config;
          o.stub_annotators = stub_annotators;
          o.stub_generator = stub_generator;
          o.seed = seed;
          o.input = input;
          o.resume = resume;
          std::ostringstream log;
          const int code = app::run_command(name, o, log);
          return std::make_pair(code, log.str());
        },
        py::arg("name"), py::arg("config"), py::arg("stub_annotators") = false, py::arg("stub_generator") = false,
        py::arg("seed") = std::nullopt, py::arg("input") = "", py::arg("resume") = false,
        "Returns (exit_code, log).");

  m.def("normalise_score_csv",
        [](const std::string& in, const std::string& out_csv, const std::string& spec) {
          app::normalise_score_csv(in, out_csv, spec);
        },
        py::arg("input"), py::arg("output_csv"), py::arg("spec_json"));
}
