// Compares the serial reference cracker (OpenSSL-backed derive path) against
// the OpenMP kernel across worker counts, over the same planted keyspace.

#include <cstdio>
#include <thread>

#include "ivote/bruteforce.hpp"
#include "ivote/credential.hpp"

using namespace ivote;

int main(int argc, char** argv) {
  int pin_digits = 3;
  int iterations = 8000;
  if (argc > 1) pin_digits = std::atoi(argv[1]);
  if (argc > 2) iterations = std::atoi(argv[2]);

  bruteforce::Keyspace ks;
  ks.fixed_id = "31415926";
  ks.pin_digits = pin_digits;
  ks.iterations = iterations;

  // Plant the target at the end of the space so every run scans all of it.
  std::string pin(static_cast<std::size_t>(pin_digits), '9');
  KdfParams params{iterations, 8, pin_digits};
  const std::string target =
      derive_login_id(Credentials{*ks.fixed_id, pin}, params);

  const auto space = bruteforce::search_space_size(ks);
  std::printf("keyspace: %llu candidates x %d iterations = %llu ops\n",
              static_cast<unsigned long long>(space.candidates), iterations,
              static_cast<unsigned long long>(space.hash_operations));

  auto serial = bruteforce::crack_serial(target, ks);
  std::printf("serial reference : %8.2fs  %12.0f iter-units/s  found=%s\n",
              serial.seconds, serial.iteration_units_per_second,
              serial.creds ? serial.creds->pin.c_str() : "-");

  const int cores = static_cast<int>(std::thread::hardware_concurrency());
  for (int workers : {1, 2, 4}) {
    if (workers > 2 * cores) break;
    bruteforce::CrackOptions opts;
    opts.workers = workers;
    auto result = bruteforce::crack(target, ks, opts);
    std::printf(
        "omp kernel (%d thr): %8.2fs  %12.0f iter-units/s  found=%s  "
        "speedup vs serial: %.2fx\n",
        workers, result.seconds, result.iteration_units_per_second,
        result.creds ? result.creds->pin.c_str() : "-",
        serial.seconds / result.seconds);
    if (!result.creds || !serial.creds || result.creds->pin != serial.creds->pin) {
      std::printf("MISMATCH between kernel and reference\n");
      return 1;
    }
  }
  return 0;
}
