import sys

from presence_hub.cli import main

sys.exit(main())
