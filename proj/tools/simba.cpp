#include <simba/cli.hpp>

int main(int argc, char** argv)
{
    return simba::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
