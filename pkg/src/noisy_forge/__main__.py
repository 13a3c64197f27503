import sys

from noisy_forge.cli import main

sys.exit(main())
