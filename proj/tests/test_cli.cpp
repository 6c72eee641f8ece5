// Subprocess-level checks of the mf tool: exit codes and the chat REPL.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#ifndef MF_TOOL
#define MF_TOOL "tools/mf"
#endif

namespace {

const std::string kWork = "/tmp/mf_cli_test";

int run(const std::string& args, const std::string& log = "out") {
  std::string cmd = std::string(MF_TOOL) + " " + args + " > " + kWork + "/" +
                    log + ".txt 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool prepared = false;

// One tiny trained focus model + bank, shared by the chat cases.
void prepare() {
  if (prepared) return;
  REQUIRE(std::system(("rm -rf " + kWork + " && mkdir -p " + kWork).c_str()) == 0);
  const std::string tiny =
      " --set synth_dialogues=30 --set embedding_dim=8"
      " --set utterance_hidden=10 --set context_hidden=12"
      " --set decoder_hidden=12 --set max_epochs=2 --set patience=2"
      " --set speaker_filter=agent";
  REQUIRE(run("synth-data --seed 3 --data " + kWork + " --out " + kWork + tiny) == 0);
  REQUIRE(run("train-hred --seed 3 --data " + kWork + "/data.jsonl --out " +
              kWork + tiny) == 0);
  REQUIRE(run("probe --seed 3 --data " + kWork + "/data.jsonl --model " +
              kWork + "/hred.ckpt --out " + kWork + tiny) == 0);
  REQUIRE(run("train-maskfocus --seed 3 --data " + kWork + "/data.jsonl" +
              " --bank " + kWork + "/bank.tsv --out " + kWork + tiny) == 0);
  prepared = true;
}

}  // namespace

TEST_CASE("exit codes: usage, data, success") {
  prepare();
  CHECK(run("no-such-subcommand") == 1);
  CHECK(run("train-hred") == 1);  // missing required --data
  CHECK(run("--help") == 0);
  // Unknown config key -> data error, message names the key.
  CHECK(run("synth-data --seed 1 --data " + kWork + " --out " + kWork +
            " --set hiden_size=10", "unknown_key") == 2);
  CHECK(slurp(kWork + "/unknown_key.txt").find("hiden_size") != std::string::npos);
  // Missing data file -> data error.
  CHECK(run("train-hred --seed 1 --data " + kWork + "/absent.jsonl --out " +
            kWork) == 2);
  // Corrupt checkpoint -> data error.
  {
    std::ofstream bad(kWork + "/bad.ckpt", std::ios::binary);
    bad << "NOPE";
  }
  CHECK(run("probe --seed 1 --data " + kWork + "/data.jsonl --model " + kWork +
            "/bad.ckpt --out " + kWork) == 2);
}

TEST_CASE("chat: deterministic transcript, /reset clears the session") {
  prepare();
  {
    std::ofstream script(kWork + "/script.txt");
    script << "hello there\nmy printer is on fire\n/reset\nhello there\n";
  }
  const std::string base = std::string(MF_TOOL) + " chat --seed 3 --data " +
                           kWork + "/data.jsonl --model " + kWork +
                           "/focus.ckpt --bank " + kWork + "/bank.tsv" +
                           " --set embedding_dim=8 --set utterance_hidden=10" +
                           " --set context_hidden=12 --set decoder_hidden=12" +
                           " < " + kWork + "/script.txt > ";
  REQUIRE(std::system((base + kWork + "/chat1.txt 2>&1").c_str()) == 0);
  REQUIRE(std::system((base + kWork + "/chat2.txt 2>&1").c_str()) == 0);
  const std::string t1 = slurp(kWork + "/chat1.txt");
  CHECK(t1 == slurp(kWork + "/chat2.txt"));
  CHECK(t1.find("(session cleared)") != std::string::npos);
  CHECK(t1.find("z_c:") != std::string::npos);
  CHECK(t1.find("z_r:") != std::string::npos);
  CHECK(t1.find("response:") != std::string::npos);

  // After /reset the context is exactly one turn again, so the reply to the
  // repeated greeting must match the first reply byte for byte.
  auto first_block = t1.find("response:");
  auto first_line = t1.substr(first_block, t1.find('\n', first_block) - first_block);
  auto reset_pos = t1.find("(session cleared)");
  auto post_block = t1.find("response:", reset_pos);
  auto post_line = t1.substr(post_block, t1.find('\n', post_block) - post_block);
  CHECK(first_line == post_line);
}
