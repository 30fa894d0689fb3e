#include "cli.hpp"

#include <iostream>

#include "cli_common.hpp"
#include "volrate/calibration.hpp"
#include "volrate/fourier_pricing.hpp"

namespace volrate::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Session session;
  session.out = &out;
  session.err = &err;

  CLI::App app{"volrate: stochastic-volatility and short-rate pricing toolkit", "volrate"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", session.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", session.threads, "Worker threads")
      ->capture_default_str()
      ->check(CLI::Range(1, 256));
  app.add_option("--out", session.out_path, "Write the JSON report here instead of stdout");

  add_calibrate_commands(app, session);
  add_price_commands(app, session);
  add_rates_commands(app, session);
  add_report_commands(app, session);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const market::MarketDataError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::out_of_range& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return session.exit_code;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace volrate::cli
