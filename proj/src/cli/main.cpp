#include "commands.hpp"

#include "fdsnn/errors.hpp"

#include <json.hpp>

#include <iostream>

namespace {

int report(const char* kind, const std::string& msg, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", msg}, {"exit", code}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fdsnn;
  CLI::App app{"Encrypted inference for discretized convolutional spiking networks"};
  app.require_subcommand(1);
  cli::register_commands(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cli::kUsage;
  } catch (const cli::Refusal& e) {
    return report("refused", e.what(), cli::kRefused);
  } catch (const FormatError& e) {
    return report("format", e.what(), cli::kFormat);
  } catch (const ConfigurationError& e) {
    return report("configuration", e.what(), cli::kParameter);
  } catch (const ParameterError& e) {
    return report("parameter", e.what(), cli::kParameter);
  } catch (const std::exception& e) {
    return report("error", e.what(), cli::kError);
  }
  return cli::kOk;
}
