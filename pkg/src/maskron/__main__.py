import sys

from maskron.cli import main

sys.exit(main())
