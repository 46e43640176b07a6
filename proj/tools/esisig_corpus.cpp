// esisig-corpus: generate test documents, apply mutations, run the
// identity-transform benchmark.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "esisig/corpus.hpp"

namespace {

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") {
    std::ostringstream buffer;
    buffer << std::cin.rdbuf();
    return std::move(buffer).str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw esisig::Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int main(int argc, char** argv) {
  using namespace esisig::corpus;
  CLI::App app{"Test corpus generation, mutation and benchmarking"};
  app.require_subcommand(1);

  CorpusSpec spec;
  auto* gen = app.add_subcommand("generate", "write a generated document to standard output");
  gen->add_option("--bytes", spec.target_bytes, "approximate size")->check(CLI::Range(1024ul, 1ul << 34));
  gen->add_option("--depth", spec.max_depth, "maximum element depth")->check(CLI::Range(2ul, 1000ul));
  gen->add_option("--seed", spec.seed, "random seed");

  std::string kind_name;
  std::uint64_t mutation_seed = 0;
  std::string input;
  std::vector<std::string> kinds;
  for (auto k : kPreservingMutations) kinds.emplace_back(mutation_name(k));
  for (auto k : kBreakingMutations) kinds.emplace_back(mutation_name(k));
  auto* mut = app.add_subcommand("mutate", "apply one mutation to a document");
  mut->add_option("kind", kind_name, "mutation kind")->required()->check(CLI::IsMember(kinds));
  mut->add_option("input", input, "input file (default: standard input)");
  mut->add_option("--seed", mutation_seed, "chooses where the mutation applies");

  std::vector<double> sizes_mb{1, 4, 16, 64};
  int reps = 3;
  std::uint64_t bench_seed = 1;
  auto* bench = app.add_subcommand("bench", "time plain and filtered identity transforms");
  bench->add_option("--sizes", sizes_mb, "document sizes in MiB");
  bench->add_option("--reps", reps, "documents per size")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "first seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto xml = generate(spec);
      std::fwrite(xml.data(), 1, xml.size(), stdout);
    } else if (mut->parsed()) {
      MutationKind kind{};
      for (auto k : kPreservingMutations) {
        if (mutation_name(k) == kind_name) kind = k;
      }
      for (auto k : kBreakingMutations) {
        if (mutation_name(k) == kind_name) kind = k;
      }
      const auto out = mutate(read_input(input), Mutation{kind, mutation_seed});
      std::fwrite(out.data(), 1, out.size(), stdout);
    } else if (bench->parsed()) {
      std::vector<std::size_t> sizes;
      for (double mb : sizes_mb) sizes.push_back(static_cast<std::size_t>(mb * 1024 * 1024));
      const auto results = bench_identity(sizes, reps, bench_seed);
      std::cout << format_bench_table(results);
      std::vector<double> x, y;
      for (const auto& r : results) {
        x.push_back(static_cast<double>(r.input_bytes));
        y.push_back(r.filtered_seconds);
      }
      if (results.size() >= 2) std::cout << "linear fit R^2 (filtered time vs size): " << linear_fit_r2(x, y) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "esisig-corpus: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
